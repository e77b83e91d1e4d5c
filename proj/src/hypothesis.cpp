#include "sitest/hypothesis.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sitest/distributions.hpp"
#include "sitest/fock.hpp"
#include "sitest/rng.hpp"

namespace sitest {
namespace {

std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

struct HhSampler {
  RVector mu;
  RMatrix L;
  int n = 0;

  HhSampler(const CVector& theta, const SqueezeParam& eta, const TestSpec& spec) : n(spec.n) {
    const PhaseSpaceMoments mom = moments(GaussianSpec{theta, eta, spec.N});
    mu = mom.mu;
    L = covariance_factor(mom.sigma);
  }

  double statistic(std::uint64_t seed, std::uint64_t experiment, std::uint64_t replicate) const {
    Philox4x32 gen(seed, experiment, replicate);
    NormalSource normal(gen);
    const auto dim = mu.size();
    RMatrix X(dim, n);
    RVector z(dim);
    for (int j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < dim; ++k) z[k] = normal();
      X.col(j) = mu + L * z;
    }
    return hotelling_F(X);
  }
};

}  // namespace

void TestSpec::validate() const {
  if (m < 1) throw std::invalid_argument("TestSpec: m must be >= 1");
  if (!(N >= 0.0)) throw std::invalid_argument("TestSpec: N must be >= 0");
  if (kind == TestKind::HH) {
    if (n < 2 * m + 1) throw std::invalid_argument("TestSpec: the HH test needs n >= 2m + 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("TestSpec: the HH test needs 0 < alpha < 1");
  } else {
    if (n < 2) throw std::invalid_argument("TestSpec: the SI test needs n >= 2");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("TestSpec: alpha must lie in [0, 1]");
  }
}

// --- HH ------------------------------------------------------------------------------------

double hotelling_F(const RMatrix& samples) {
  const auto dim = samples.rows();
  const auto n = samples.cols();
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("hotelling_F: samples must have 2m rows");
  if (n < dim + 1) throw std::invalid_argument("hotelling_F: need n >= 2m + 1 samples");
  const RVector mean = samples.rowwise().mean();
  const RMatrix centered = samples.colwise() - mean;
  const RMatrix cov = centered * centered.transpose() / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(cov);
  const RVector& ev = es.eigenvalues();
  if (!(ev.maxCoeff() > 0.0) || ev.minCoeff() <= 1e-12 * ev.maxCoeff()) {
    throw std::domain_error("hotelling_F: sample covariance is singular");
  }
  const RVector proj = es.eigenvectors().transpose() * mean;
  const double t2 = static_cast<double>(n) * (proj.array().square() / ev.array()).sum();
  const double mu_dof = static_cast<double>(dim);
  const double nu_dof = static_cast<double>(n - dim);
  return t2 * nu_dof / (static_cast<double>(n - 1) * mu_dof);
}

double hh_type2_from_kappa(double kappa_value, const TestSpec& spec) {
  TestSpec hh = spec;
  hh.kind = TestKind::HH;
  hh.validate();
  const double c = critical_point(hh.alpha, hh.mu_dof(), hh.nu_dof());
  return noncentral_f_cdf(c, NoncentralFParams{hh.mu_dof(), hh.nu_dof(), hh.n * kappa_value});
}

double hh_type2_analytic(const CVector& theta, const SqueezeParam& eta, const TestSpec& spec) {
  if (theta.size() != spec.m) throw std::invalid_argument("hh_type2_analytic: theta must have m entries");
  return hh_type2_from_kappa(kappa(theta, eta, spec.N), spec);
}

std::vector<double> hh_statistics(const CVector& theta, const SqueezeParam& eta, const TestSpec& spec, long reps,
                                  std::uint64_t seed, std::uint64_t experiment, bool parallel) {
  TestSpec hh = spec;
  hh.kind = TestKind::HH;
  hh.validate();
  if (reps < 1) throw std::invalid_argument("hh_statistics: reps must be >= 1");
  const HhSampler sampler(theta, eta, hh);
  std::vector<double> out(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(static) if (parallel)
  for (long r = 0; r < reps; ++r) out[static_cast<std::size_t>(r)] = sampler.statistic(seed, experiment, static_cast<std::uint64_t>(r));
  return out;
}

McEstimate hh_type2_montecarlo(const CVector& theta, const SqueezeParam& eta, const TestSpec& spec, long reps,
                               std::uint64_t seed, std::uint64_t experiment, bool parallel) {
  TestSpec hh = spec;
  hh.kind = TestKind::HH;
  hh.validate();
  if (reps < 1) throw std::invalid_argument("hh_type2_montecarlo: reps must be >= 1");
  const double c = critical_point(hh.alpha, hh.mu_dof(), hh.nu_dof());
  const HhSampler sampler(theta, eta, hh);
  long accepted = 0;
#pragma omp parallel for schedule(static) reduction(+ : accepted) if (parallel)
  for (long r = 0; r < reps; ++r) {
    if (sampler.statistic(seed, experiment, static_cast<std::uint64_t>(r)) <= c) ++accepted;
  }
  McEstimate est;
  est.reps = reps;
  est.estimate = static_cast<double>(accepted) / static_cast<double>(reps);
  est.stderr_ = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(reps));
  return est;
}

double ks_critical_value(double significance, std::size_t n) {
  if (!(significance > 0.0 && significance < 1.0) || n == 0) throw std::invalid_argument("ks_critical_value: bad input");
  return std::sqrt(-0.5 * std::log(0.5 * significance)) / std::sqrt(static_cast<double>(n));
}

// --- SI ----------------------------------------------------------------------------------------

double si_type2_closed(double theta_norm, const TestSpec& spec) {
  TestSpec si = spec;
  si.kind = TestKind::SI;
  si.validate();
  if (si.N != 0.0) throw std::domain_error("si_type2_closed: closed form exists only for N = 0");
  if (theta_norm == 0.0) return 1.0 - si.alpha;
  const double z = si.n * theta_norm * theta_norm;
  return (1.0 - si.alpha) * si_integral_scaled(z, si.n) / beta_function(0.5 * (si.n - 1), 0.5);
}

SiN2Result si_type2_n2(double theta_norm, int m, double N, double alpha) {
  TestSpec{m, 2, N, alpha, TestKind::SI}.validate();
  const IntegerDistribution null_y = y_distribution(m, 0.0, N);
  const IntegerDistribution alt_y = y_distribution(m, theta_norm, N);
  const long L = std::max(null_y.hi(), alt_y.hi());
  std::vector<double> values, null_mass, alt_mass;
  for (long y = 0; y <= L; ++y) {
    values.push_back(static_cast<double>(y * y));
    null_mass.push_back(y == 0 ? null_y.at(0) : null_y.at(y) + null_y.at(-y));
    alt_mass.push_back(y == 0 ? alt_y.at(0) : alt_y.at(y) + alt_y.at(-y));
  }
  SiN2Result out;
  out.level = solve_level(values, null_mass, alpha);
  out.beta = acceptance_probability(out.level, alt_mass);
  out.null_tail = null_y.tail_mass;
  out.alt_tail = alt_y.tail_mass;
  return out;
}

double si_small_theta_slope(const TestSpec& spec, SiRoute route) {
  TestSpec si = spec;
  si.kind = TestKind::SI;
  si.validate();
  if (si.N != 0.0) throw std::domain_error("si_small_theta_slope: requires N = 0");
  if (route == SiRoute::N2 && si.n != 2) throw std::invalid_argument("si_small_theta_slope: the n = 2 route needs n = 2");
  const double h[3] = {1e-2, 5e-3, 2.5e-3};
  double g[3];
  for (int i = 0; i < 3; ++i) {
    const double beta = route == SiRoute::Closed ? si_type2_closed(h[i], si) : si_type2_n2(h[i], si.m, 0.0, si.alpha).beta;
    g[i] = (1.0 - si.alpha - beta) / (h[i] * h[i]);
  }
  // g = c0 + c1 h^2 + c2 h^4 + ...; halving h divides h^2 by 4.
  const double r0 = (4.0 * g[1] - g[0]) / 3.0;
  const double r1 = (4.0 * g[2] - g[1]) / 3.0;
  return (16.0 * r1 - r0) / 15.0;
}

CrossingResult crossing_check(double alpha, const std::vector<double>& grid) {
  const TestSpec spec{1, 3, 0.0, alpha, TestKind::HH};
  spec.validate();
  constexpr double kSeparation = 1e-10;
  CrossingResult out;
  out.grid = grid;
  const SqueezeParam eta0 = SqueezeParam::zero(1);
  for (double t : grid) {
    const double bsi = si_type2_closed(std::abs(t), spec);
    const double bhh = hh_type2_analytic(theta_along(std::abs(t), 1, ThetaDirection::Real), eta0, spec);
    out.beta_si.push_back(bsi);
    out.beta_hh.push_back(bhh);
    if (!out.found_small && bsi < bhh - kSeparation) {
      out.found_small = true;
      out.theta_small = t;
    }
    if (bsi > bhh + kSeparation) {
      out.found_large = true;
      out.theta_large = t;
    }
  }
  return out;
}

// --- curves ------------------------------------------------------------------------------------

CVector theta_along(double theta_norm, int m, ThetaDirection direction) {
  const cplx unit = direction == ThetaDirection::Real ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
  return CVector::Constant(m, unit * (theta_norm / std::sqrt(static_cast<double>(m))));
}

ErrorCurve evaluate_curve(const CurveConfig& config, bool parallel) {
  TestSpec hh = config.spec;
  hh.kind = TestKind::HH;
  hh.validate();
  if (config.theta_grid.empty()) throw std::invalid_argument("evaluate_curve: empty theta grid");
  for (const auto& v : config.etas)
    if (v.eta.modes() != hh.m) throw std::invalid_argument("evaluate_curve: eta '" + v.label + "' has wrong mode count");

  ErrorCurve curve;
  curve.config = config;
  const std::size_t T = config.theta_grid.size(), E = config.etas.size();
  curve.beta_si.assign(T, 0.0);
  curve.beta_hh.assign(E, std::vector<double>(T, 0.0));
  if (config.reps > 0) curve.mc_hh.assign(E, std::vector<McEstimate>(T));

  std::unique_ptr<fock::TinvSpectrum> spectrum;
  if (hh.N == 0.0) {
    curve.si_method = "closed form (pure states)";
  } else if (hh.n == 2) {
    curve.si_method = "n = 2 randomized test on Y^2";
  } else if (config.fock_cutoff > 0) {
    curve.si_method = "truncated Fock operators, cutoff " + std::to_string(config.fock_cutoff);
    spectrum = std::make_unique<fock::TinvSpectrum>(fock::FockConfig(hh.m, hh.n, config.fock_cutoff), parallel,
                                                       1e-8, config.fock_cutoff - 1);
  } else {
    throw std::invalid_argument("evaluate_curve: the SI test with n > 2 and N > 0 needs a Fock cutoff");
  }

  auto si_at = [&](double t) {
    if (hh.N == 0.0) return si_type2_closed(t, hh);
    if (hh.n == 2) return si_type2_n2(t, hh.m, hh.N, hh.alpha).beta;
    return fock::si_type2_fock(theta_along(t, hh.m, ThetaDirection::Real), hh.N, hh.alpha, *spectrum).beta;
  };

  const long cells = static_cast<long>(T * (E + 1));
  // One cell per (theta, column); column E is the SI value.
#pragma omp parallel for schedule(dynamic) if (parallel && !spectrum)
  for (long cell = 0; cell < cells; ++cell) {
    const std::size_t i = static_cast<std::size_t>(cell) / (E + 1), e = static_cast<std::size_t>(cell) % (E + 1);
    const double t = std::abs(config.theta_grid[i]);
    if (e == E) {
      curve.beta_si[i] = si_at(t);
      continue;
    }
    const EtaVariant& v = config.etas[e];
    const CVector theta = theta_along(t, hh.m, v.direction);
    curve.beta_hh[e][i] = hh_type2_analytic(theta, v.eta, hh);
    if (config.reps > 0) {
      curve.mc_hh[e][i] = hh_type2_montecarlo(theta, v.eta, hh, config.reps, config.seed,
                                              static_cast<std::uint64_t>(i * E + e), false);
    }
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const ErrorCurve& curve) {
  const CurveConfig& c = curve.config;
  out << "# m " << c.spec.m << "\n# n " << c.spec.n << "\n# N " << num(c.spec.N) << "\n# alpha " << num(c.spec.alpha)
      << "\n# theta_points " << c.theta_grid.size() << "\n# reps " << c.reps << "\n# seed " << c.seed
      << "\n# si_method " << curve.si_method << '\n';
  for (const auto& v : c.etas) {
    out << "# eta " << v.label << " theta_direction " << (v.direction == ThetaDirection::Real ? "real" : "imaginary")
        << " A";
    for (Eigen::Index r = 0; r < v.eta.A().rows(); ++r)
      for (Eigen::Index k = 0; k < v.eta.A().cols(); ++k) out << ' ' << format_complex(v.eta.A()(r, k));
    out << " S";
    for (Eigen::Index r = 0; r < v.eta.S().rows(); ++r)
      for (Eigen::Index k = 0; k < v.eta.S().cols(); ++k) out << ' ' << format_complex(v.eta.S()(r, k));
    out << '\n';
  }
  out << "theta,beta_si";
  for (const auto& v : c.etas) out << ",beta_hh_" << v.label;
  if (c.reps > 0)
    for (const auto& v : c.etas) out << ",mc_hh_" << v.label << ",mc_stderr_" << v.label;
  out << '\n';
  for (std::size_t i = 0; i < c.theta_grid.size(); ++i) {
    out << num(c.theta_grid[i]) << ',' << num(curve.beta_si[i]);
    for (std::size_t e = 0; e < c.etas.size(); ++e) out << ',' << num(curve.beta_hh[e][i]);
    if (c.reps > 0)
      for (std::size_t e = 0; e < c.etas.size(); ++e)
        out << ',' << num(curve.mc_hh[e][i].estimate) << ',' << num(curve.mc_hh[e][i].stderr_);
    out << '\n';
  }
}

}  // namespace sitest
