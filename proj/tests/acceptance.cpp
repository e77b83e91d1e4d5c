// Acceptance run: one PASS/FAIL line per criterion, diagnostics indented.
// Usage: acceptance [--expect-fail <k>]...
// A criterion named with --expect-fail still prints FAIL but does not set the
// exit status; if it unexpectedly passes, the run fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "sitest/distributions.hpp"
#include "sitest/fock.hpp"
#include "sitest/hypothesis.hpp"
#include "sitest/phase_space.hpp"
#include "sitest/rng.hpp"

using namespace sitest;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void info(const std::string& s) { std::printf("    %s\n", s.c_str()); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1 -----------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double alpha = 0.05;
  const std::vector<double> thetas{0.0, 0.3, 0.7};
  double worst_n2 = 0.0, worst_fock = 0.0;
  for (double t : thetas) {
    const double closed = si_type2_closed(t, TestSpec{1, 2, 0.0, alpha, TestKind::SI});
    worst_n2 = std::max(worst_n2, std::abs(closed - si_type2_n2(t, 1, 0.0, alpha).beta));
  }
  for (int n : {2, 3}) {
    const fock::FockConfig cfg(1, n, 30);
    const fock::TinvSpectrum spectrum(cfg, true, 1e-8, cfg.d - 1);
    for (double t : thetas) {
      const double closed = si_type2_closed(t, TestSpec{1, n, 0.0, alpha, TestKind::SI});
      const fock::SiFockResult r = fock::si_type2_fock(CVector::Constant(1, t), 0.0, alpha, spectrum);
      const double diff = std::abs(closed - r.beta);
      worst_fock = std::max(worst_fock, diff);
      info(fmt("n=%.0f theta=%.1f closed=%.12f fock=%.12f", n, t, closed, r.beta) +
           fmt(" alt_loss=%.1e", r.alt_truncation_loss));
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_n2 < 1e-8 && worst_fock < 1e-4 && secs < 120.0;
  return {ok, fmt("closed vs n2 %.2e (tol 1e-8), closed vs Fock d=30 %.2e (tol 1e-4), %.1f s (limit 120 s)", worst_n2,
                  worst_fock, secs)};
}

// --- 2 -----------------------------------------------------------------------

// Spectral law of -i v_12 on rho_{theta,N}^{(x)2} for one mode per copy,
// sector by sector; only complete sectors (total <= d-1) are used.
IntegerDistribution fock_y_law(cplx theta, double N, int d) {
  const fock::FockConfig cfg(1, 2, d);
  const fock::SectorBasis basis(cfg);
  const fock::SectorOperator v = fock::sector_v_operator(1, 2, basis);
  const fock::TruncatedState one = fock::thermal_coherent_state(theta, N, d);
  IntegerDistribution out;
  out.lo = -(d - 1);
  out.pmf.assign(static_cast<std::size_t>(2 * d - 1), 0.0);
  for (int K = 0; K <= d - 1; ++K) {
    const auto& mem = basis.members(K);
    const auto size = static_cast<Eigen::Index>(mem.size());
    CMatrix rho(size, size);
    for (Eigen::Index a = 0; a < size; ++a) {
      const auto oa = basis.occupations(mem[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < size; ++b) {
        const auto ob = basis.occupations(mem[static_cast<std::size_t>(b)]);
        rho(a, b) = one.rho(oa[0], ob[0]) * one.rho(oa[1], ob[1]);
      }
    }
    const CMatrix H = cplx(0.0, -1.0) * v.blocks[static_cast<std::size_t>(K)];
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (H + H.adjoint()));
    for (Eigen::Index e = 0; e < size; ++e) {
      const double lam = es.eigenvalues()[e];
      const long y = std::lround(lam);
      if (std::abs(lam - static_cast<double>(y)) > 1e-8) throw std::runtime_error("non-integer eigenvalue of -i v_12");
      const CVector col = es.eigenvectors().col(e);
      out.pmf[static_cast<std::size_t>(y - out.lo)] += col.dot(rho * col).real();
    }
  }
  return out;
}

IntegerDistribution convolve(const IntegerDistribution& a, const IntegerDistribution& b) {
  IntegerDistribution c;
  c.lo = a.lo + b.lo;
  c.pmf.assign(a.pmf.size() + b.pmf.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.pmf.size(); ++i)
    for (std::size_t j = 0; j < b.pmf.size(); ++j) c.pmf[i + j] += a.pmf[i] * b.pmf[j];
  return c;
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const cplx phase = std::polar(1.0, std::numbers::pi / 4);
  double worst_cf = 0.0, worst_fock = 0.0;
  for (int m : {1, 2})
    for (double t : {0.0, 0.5, 1.0})
      for (double N : {0.0, 0.5, 1.0}) {
        const IntegerDistribution direct = y_distribution(m, t, N);
        const IntegerDistribution inverted =
            cf_invert([=](double r) { return y_char_function(m, t, N, r); }, direct.hi() + 5);
        worst_cf = std::max(worst_cf, total_variation(direct, inverted));
        // v_12 = sum over modes of commuting one-mode pieces on a product
        // state, so the m = 2 law is the convolution of two one-mode laws.
        const cplx per_mode = phase * (t / std::sqrt(static_cast<double>(m)));
        IntegerDistribution fock_law = fock_y_law(per_mode, N, 40);
        if (m == 2) fock_law = convolve(fock_law, fock_law);
        const double tv = total_variation(direct, fock_law);
        worst_fock = std::max(worst_fock, tv);
        info(fmt("m=%.0f |theta|=%.1f N=%.1f  TV(compound, Fock d=40)=%.2e", m, t, N, tv));
      }
  const double secs = seconds_since(t0);
  const bool ok = worst_cf < 1e-8 && worst_fock < 1e-4 && secs < 180.0;
  return {ok, fmt("TV(cf inversion, compound) %.2e (tol 1e-8), TV(compound, Fock) %.2e (tol 1e-4), %.1f s (limit 180 s)",
                  worst_cf, worst_fock, secs)};
}

// --- 3 -----------------------------------------------------------------------

Outcome criterion3() {
  double worst_int = 0.0;
  boost::math::quadrature::exp_sinh<double> integrator;
  for (double lambda : {0.0, 1.0, 5.0}) {
    const NoncentralFParams p{2.0, 1.0, lambda};
    double err = 0.0;
    const double total = integrator.integrate([&](double f) { return noncentral_f_pdf(f, p); }, 0.0,
                                              std::numeric_limits<double>::infinity(), 1e-13, &err);
    info(fmt("lambda=%.0f  integral of pdf = %.15f (quadrature error estimate %.1e)", lambda, total, err));
    worst_int = std::max(worst_int, std::abs(total - 1.0));
  }
  const double alpha = 0.05;
  const double c = critical_point(alpha, 2.0, 1.0);
  const double c_tail = boost::math::quadrature::exp_sinh<double>().integrate(
      [&](double f) { return noncentral_f_pdf(c + f, NoncentralFParams{2.0, 1.0, 0.0}); }, 0.0,
      std::numeric_limits<double>::infinity(), 1e-14);
  const double round_trip = std::abs(c_tail - alpha);
  info(fmt("critical point c = %.12f, tail integral = %.15f", c, c_tail));

  const TestSpec spec{1, 3, 0.0, alpha, TestKind::HH};
  const std::vector<double> stats = hh_statistics(CVector::Zero(1), SqueezeParam::zero(1), spec, 100000, 20240601);
  const NoncentralFParams central{2.0, 1.0, 0.0};
  const double D = ks_statistic(stats, [&](double x) { return noncentral_f_cdf(x, central); });
  const double Dcrit = ks_critical_value(0.01, stats.size());
  const bool ok = worst_int < 1e-8 && round_trip < 1e-9 && D < Dcrit;
  return {ok, fmt("|int pdf - 1| %.2e (tol 1e-8), |tail(c) - alpha| %.2e (tol 1e-9), KS D=%.4f < %.4f (1%% level)",
                  worst_int, round_trip, D, Dcrit)};
}

// --- 4 -----------------------------------------------------------------------

Outcome criterion4() {
  const double alpha = 0.05, t = 0.5;
  const TestSpec spec{1, 3, 0.0, alpha, TestKind::HH};
  const CVector theta = CVector::Constant(1, t);
  double lo = 1.0, hi = 0.0, worst_kappa = 0.0;
  for (double r : {1.0, 0.5, 0.1}) {
    const SqueezeParam eta = SqueezeParam::r_family(1, r);
    const double b = hh_type2_analytic(theta, eta, spec);
    worst_kappa = std::max(worst_kappa, std::abs(kappa(theta, eta, 0.0) - kappa_r_family(t, r, 0.0)));
    info(fmt("r=%.1f  beta_HH=%.10f", r, b));
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  const double b_small = hh_type2_analytic(theta, SqueezeParam::r_family(1, 1e-3), spec);
  const double gap = std::abs(b_small - (1.0 - alpha));
  info(fmt("r=1e-3 beta_HH=%.10f", b_small));
  const bool ok = hi - lo > 1e-3 && gap < 1e-4 && worst_kappa < 1e-12;
  return {ok, fmt("spread over r %.3e (> 1e-3), |beta(1e-3) - (1-alpha)| %.2e (tol 1e-4), kappa vs closed form %.1e",
                  hi - lo, gap, worst_kappa)};
}

// --- 5 -----------------------------------------------------------------------

// Last theta at which the SI curve moves from below the HH curve to above it.
double last_upward_crossing(const CrossingResult& r) {
  double at = -1.0;
  for (std::size_t i = 1; i < r.grid.size(); ++i)
    if (r.beta_si[i - 1] <= r.beta_hh[i - 1] && r.beta_si[i] > r.beta_hh[i]) at = r.grid[i];
  return at;
}

Outcome criterion5() {
  const double alpha = 0.05, step = 0.05;
  std::vector<double> coarse, fine;
  for (int i = 1; i <= 800; ++i) coarse.push_back(step * i);
  for (int i = 1; i <= 1600; ++i) fine.push_back(0.5 * step * i);
  const CrossingResult a = crossing_check(alpha, coarse);
  const CrossingResult b = crossing_check(alpha, fine);
  const double xa = last_upward_crossing(a), xb = last_upward_crossing(b);
  info(fmt("coarse: theta_small=%.3f theta_large=%.3f crossing at %.3f", a.theta_small, a.theta_large, xa));
  info(fmt("fine:   theta_small=%.3f theta_large=%.3f crossing at %.3f", b.theta_small, b.theta_large, xb));
  const bool found = a.found_small && a.found_large && b.found_small && b.found_large;
  const bool stable = found && xa > 0 && xb > 0 && std::abs(xa - xb) <= step &&
                      std::abs(a.theta_small - b.theta_small) <= step;
  return {found && stable, std::string("witnesses found on both grids: ") + (found ? "yes" : "no") +
                               fmt(", crossing moved %.3f under refinement (tol %.2f)", std::abs(xa - xb), step)};
}

// --- 6 -----------------------------------------------------------------------

Outcome criterion6() {
  const double alpha = 0.05;
  const int n = 3;
  const TestSpec si{1, n, 0.0, alpha, TestKind::SI};
  const TestSpec hh{1, n, 0.0, alpha, TestKind::HH};
  const double t0 = 2.5e-3;
  const double slope = (1.0 - alpha - si_type2_closed(t0, si)) / (n * t0 * t0 * (1.0 - alpha));
  // For n = 3 the closed form reduces to (1-alpha)(1 - e^{-6 t^2})/(6 t^2),
  // so t^2 beta_SI never exceeds (1-alpha)/6.
  const double bound = (1.0 - alpha) / 6.0;
  bool bounded = true;
  std::vector<double> ratio;
  for (double t : {2.0, 3.0, 4.0}) {
    const double bs = si_type2_closed(t, si);
    const double bh = hh_type2_analytic(CVector::Constant(1, t), SqueezeParam::zero(1), hh);
    bounded = bounded && t * t * bs <= bound * (1.0 + 1e-12);
    ratio.push_back(bh / bs);
    info(fmt("theta=%.0f  beta_SI=%.6e  beta_HH=%.6e  ratio=%.4f", t, bs, bh, bh / bs) +
         fmt("  theta^2 beta_SI=%.6f", t * t * bs));
  }
  const bool decreasing = ratio[1] < ratio[0] && ratio[2] < ratio[1];
  for (double t : {30.0, 35.0, 40.0}) {
    const double r = hh_type2_analytic(CVector::Constant(1, t), SqueezeParam::zero(1), hh) / si_type2_closed(t, si);
    info(fmt("far tail, alpha=0.05: theta=%.0f ratio=%.4f", t, r));
  }
  for (double t : {2.0, 3.0, 4.0}) {
    const TestSpec si95{1, n, 0.0, 0.95, TestKind::SI}, hh95{1, n, 0.0, 0.95, TestKind::HH};
    const double r = hh_type2_analytic(CVector::Constant(1, t), SqueezeParam::zero(1), hh95) / si_type2_closed(t, si95);
    info(fmt("alpha=0.95: theta=%.0f ratio=%.4e", t, r));
  }
  const bool slope_ok = std::abs(slope - 1.0) < 0.01;
  return {slope_ok && bounded && decreasing,
          fmt("slope ratio %.5f (tol 1%%), ", slope) + "theta^2 beta_SI bounded: " + (bounded ? "yes" : "no") +
              ", beta_HH/beta_SI decreasing on {2,3,4}: " + (decreasing ? "yes" : "no")};
}

// --- 7 -----------------------------------------------------------------------

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const fock::FockConfig cfg(1, 2, 12);
  const CMatrix v = fock::v_operator(1, 2, cfg).matrix;
  const auto interior = fock::interior_indices(cfg, cfg.d - 4);
  Philox4x32 gen(7, 7, 0);
  NormalSource normal(gen);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const CMatrix A = CMatrix::Constant(1, 1, cplx(0.0, normal()));
    const CMatrix S = CMatrix::Constant(1, 1, cplx(normal(), normal()));
    const CMatrix s = fock::squeeze_generator(SqueezeParam(A, S), cfg).matrix;
    worst = std::max(worst, max_abs(fock::restrict_to(CMatrix(s * v - v * s), interior)));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-8 && secs < 60.0,
          fmt("max restricted commutator %.2e (tol 1e-8) over 20 draws, %.1f s (limit 60 s)", worst, secs)};
}

// --- 8 -----------------------------------------------------------------------

Outcome criterion8() {
  double worst_R = 0.0;
  for (int n = 2; n <= 8; ++n) {
    const RVector got = rotation_matrix_R(n) * RVector::Ones(n);
    RVector want = RVector::Zero(n);
    want[n - 1] = std::sqrt(static_cast<double>(n));
    worst_R = std::max(worst_R, (got - want).cwiseAbs().maxCoeff());
  }
  double worst_avg = 0.0;
  for (int n : {2, 3}) {
    const fock::FockConfig cfg(1, n, n == 2 ? 14 : 9);
    const fock::RotationAverage avg = fock::rotation_average_oracle(cfg);
    for (double r : {0.2, 0.4}) {
      const CVector z = fock::coherent_product(CMatrix::Constant(1, n, r), cfg).amplitudes;
      const double got = z.dot(avg.W.matrix * z).real();
      const double expect = si_integral_scaled(n * r * r, n) / beta_function(0.5 * (n - 1), 0.5);
      worst_avg = std::max(worst_avg, std::abs(got - expect));
      info(fmt("n=%.0f r=%.1f  <Z|W|Z>=%.10f  closed form=%.10f", n, r, got, expect));
    }
  }
  return {worst_R < 1e-12 && worst_avg < 1e-5,
          fmt("|R 1 - sqrt(n) e_n| %.2e (tol 1e-12), rotation average vs inner product %.2e (tol 1e-5)", worst_R,
              worst_avg)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_fail;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) {
      expected_fail.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--expect-fail <criterion>]...\n", argv[0]);
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"SI type II error: closed form, n=2 integer route and Fock oracle agree", criterion1},
      {"Y law: characteristic function, compound law and Fock spectral measure agree", criterion2},
      {"noncentral F engine and HH null calibration", criterion3},
      {"HH type II error depends on squeezing and reaches 1-alpha", criterion4},
      {"SI and HH curves cross (m=1, n=3, N=0, alpha=0.05)", criterion5},
      {"asymptotic slopes and tail ratio", criterion6},
      {"v_12 commutes with the squeeze generator on the interior block", criterion7},
      {"rotation matrix and SO(n) average", criterion8},
  };
  int unexpected = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const bool expected = expected_fail.count(id) > 0;
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str());
    std::printf("    %s\n", o.detail.c_str());
    if (expected && !o.pass) std::printf("    (known failure, listed with --expect-fail)\n");
    if (expected && o.pass) std::printf("    (listed with --expect-fail but passed)\n");
    if (o.pass == expected) ++unexpected;
    std::fflush(stdout);
  }
  std::printf("%d unexpected result(s)\n", unexpected);
  return unexpected == 0 ? 0 : 1;
}
