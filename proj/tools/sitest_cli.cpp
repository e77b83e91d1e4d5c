// Experiment driver: error-curve CSV for the HH and SI tests, and the
// cross-check batteries.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sitest/hypothesis.hpp"
#include "sitest/verify.hpp"

namespace {

using namespace sitest;

EtaVariant resolve_eta(const std::string& name, int m) {
  if (name == "zero") return {"eta0", SqueezeParam::zero(m), ThetaDirection::Real};
  // L = [[0, 1], [1, 0]] in the (A, S) block form: A = 0, S = identity.
  const SqueezeParam L(CMatrix::Zero(m, m), CMatrix::Identity(m, m));
  if (name == "L-real-theta") return {"etaL_real", L, ThetaDirection::Real};
  if (name == "L-imag-theta") return {"etaL_imag", L, ThetaDirection::Imaginary};
  std::string label = "eta_" + std::filesystem::path(name).stem().string();
  for (char& c : label)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return {label, load_squeeze(name), ThetaDirection::Real};
}

std::vector<double> linspace(double lo, double hi, int steps) {
  if (steps < 1) throw std::invalid_argument("--theta-steps must be >= 1");
  if (steps == 1) {
    if (lo != hi) throw std::invalid_argument("a single grid point needs --theta-min == --theta-max");
    return {lo};
  }
  if (!(hi > lo)) throw std::invalid_argument("--theta-max must exceed --theta-min");
  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (steps - 1);
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterodyne-Hotelling and squeezing-invariant test error curves"};
  app.require_subcommand(1);

  CurveConfig cfg;
  double theta_min = 0.0, theta_max = 3.0;
  int theta_steps = 61;
  std::vector<std::string> eta_names{"zero", "L-real-theta", "L-imag-theta"};
  std::string out_path = "-";
  bool serial = false;

  auto* figure = app.add_subcommand("figure", "write the type II error curves as CSV");
  figure->add_option("--m", cfg.spec.m, "modes per copy")->capture_default_str();
  figure->add_option("--n", cfg.spec.n, "number of copies")->capture_default_str();
  figure->add_option("--N", cfg.spec.N, "thermal mixture parameter")->capture_default_str();
  figure->add_option("--alpha", cfg.spec.alpha, "test level (type I error bound)")->capture_default_str();
  figure->add_option("--theta-min", theta_min, "smallest |theta|")->capture_default_str();
  figure->add_option("--theta-max", theta_max, "largest |theta|")->capture_default_str();
  figure->add_option("--theta-steps", theta_steps, "grid points")->capture_default_str();
  figure->add_option("--eta", eta_names, "zero, L-real-theta, L-imag-theta or a squeeze file")->capture_default_str();
  figure->add_option("--reps", cfg.reps, "Monte Carlo replicates per point (0 = analytic only)")->capture_default_str();
  figure->add_option("--seed", cfg.seed, "Monte Carlo seed")->capture_default_str();
  figure->add_option("--fock-cutoff", cfg.fock_cutoff, "Fock cutoff for the SI test when n > 2 and N > 0");
  figure->add_option("--out", out_path, "output CSV path, '-' for stdout")->capture_default_str();
  figure->add_flag("--serial", serial, "disable OpenMP parallelism");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run cross-check batteries");
  verify->add_option("suite", suite, "fock, distributions, tests or all")
      ->required()
      ->check(CLI::IsMember({"fock", "distributions", "tests", "all"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify) return run_verify(suite, std::cout) == 0 ? 0 : 1;

    if (cfg.reps < 0) throw std::invalid_argument("--reps must be >= 0");
    cfg.theta_grid = linspace(theta_min, theta_max, theta_steps);
    for (const auto& name : eta_names) cfg.etas.push_back(resolve_eta(name, cfg.spec.m));
    const ErrorCurve curve = evaluate_curve(cfg, !serial);
    if (out_path == "-") {
      write_curve_csv(std::cout, curve);
    } else {
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
      write_curve_csv(out, curve);
      if (!out) throw std::runtime_error("write to " + out_path + " failed");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
