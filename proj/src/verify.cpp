#include "sitest/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "sitest/distributions.hpp"
#include "sitest/fock.hpp"
#include "sitest/hypothesis.hpp"

namespace sitest {
namespace {

struct Reporter {
  std::ostream& out;
  int failures = 0;

  void check(const std::string& name, const std::function<double()>& residual, double tol) {
    try {
      const double r = residual();
      const bool ok = r <= tol;
      if (!ok) ++failures;
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s %-58s residual=%.3e tol=%.1e", ok ? "PASS" : "FAIL", name.c_str(), r, tol);
      out << buf << '\n';
    } catch (const BudgetExceeded& e) {
      out << "SKIP " << name << " (budget: " << e.what() << ")\n";
    } catch (const std::exception& e) {
      ++failures;
      out << "FAIL " << name << " (error: " << e.what() << ")\n";
    }
  }
};

void fock_suite(Reporter& rep) {
  using namespace fock;
  const double alpha = 0.05;
  for (int n : {2, 3}) {
    for (double t : {0.3, 0.7}) {
      rep.check("si_type2_fock vs closed form, n=" + std::to_string(n) + " theta=" + std::to_string(t), [=] {
        const TestSpec spec{1, n, 0.0, alpha, TestKind::SI};
        const double fockv = si_type2_fock(CVector::Constant(1, t), 0.0, alpha, FockConfig(1, n, 30)).beta;
        return std::abs(fockv - si_type2_closed(t, spec));
      }, 1e-4);
    }
  }
  rep.check("si_type2_fock vs n=2 Y^2 test, N=0.5 theta=0.5", [=] {
    const double fockv = si_type2_fock(CVector::Constant(1, 0.5), 0.5, alpha, FockConfig(1, 2, 40)).beta;
    return std::abs(fockv - si_type2_n2(0.5, 1, 0.5, alpha).beta);
  }, 1e-4);
  rep.check("T_inv dense vs sector blocks (m=1, n=3, d=5)", [] {
    const FockConfig cfg(1, 3, 5);
    const SectorBasis basis(cfg);
    return max_abs(CMatrix(T_inv_operator(cfg).matrix - sector_T_inv(basis).to_dense().matrix));
  }, 1e-10);
  rep.check("squeeze generator commutes with v_12 on interior (d=12)", [] {
    const FockConfig cfg(1, 2, 12);
    const SqueezeParam eta(CMatrix::Constant(1, 1, cplx(0.0, 0.7)), CMatrix::Constant(1, 1, cplx(0.4, -0.6)));
    const CMatrix s = squeeze_generator(eta, cfg).matrix;
    const CMatrix v = v_operator(1, 2, cfg).matrix;
    return max_abs(restrict_to(CMatrix(s * v - v * s), interior_indices(cfg, cfg.d - 3)));
  }, 1e-8);
  for (int n : {2, 3}) {
    rep.check("rotation average vs SO(n) inner product, n=" + std::to_string(n), [=] {
      const double r = 0.4;
      const FockConfig cfg(1, n, n == 2 ? 14 : 9);
      const RotationAverage avg = rotation_average_oracle(cfg);
      const CVector z = coherent_product(CMatrix::Constant(1, n, r), cfg).amplitudes;
      const double got = z.dot(avg.W.matrix * z).real();
      const double s = n * r * r;
      const double expect = si_integral_scaled(s, n) / beta_function(0.5 * (n - 1), 0.5);
      return std::abs(got - expect);
    }, 1e-5);
  }
}

void distributions_suite(Reporter& rep) {
  for (int m : {1, 2})
    for (double t : {0.0, 0.5, 1.0})
      for (double N : {0.0, 0.5, 1.0}) {
        char name[96];
        std::snprintf(name, sizeof name, "Y law: cf inversion vs compound law m=%d |theta|=%.1f N=%.1f", m, t, N);
        rep.check(name, [=] {
          const IntegerDistribution direct = y_distribution(m, t, N);
          const IntegerDistribution inverted =
              cf_invert([=](double r) { return y_char_function(m, t, N, r); }, direct.hi() + 5);
          return total_variation(direct, inverted);
        }, 1e-8);
      }
  for (double lambda : {0.0, 1.0, 5.0}) {
    rep.check("noncentral F cdf(inf) - cdf(large) tail, lambda=" + std::to_string(lambda), [=] {
      const NoncentralFParams p{2.0, 1.0, lambda};
      return std::abs(1.0 - noncentral_f_cdf(1e12, p));
    }, 1e-5);
  }
  rep.check("critical point round trip (mu=2, nu=1, alpha=0.05)", [] {
    const double c = critical_point(0.05, 2.0, 1.0);
    return std::abs(1.0 - noncentral_f_cdf(c, NoncentralFParams{2.0, 1.0, 0.0}) - 0.05);
  }, 1e-9);
  rep.check("negative binomial cf inversion round trip", [] {
    const IntegerDistribution nb = neg_binomial(2.0, 0.4);
    const IntegerDistribution inv = cf_invert([](double r) { return neg_binomial_cf(2.0, 0.4, r); }, nb.hi() + 5);
    return total_variation(nb, inv);
  }, 1e-10);
  rep.check("si_integral(z, 3) vs (e^z - e^-z)/z at z=2", [] {
    return std::abs(si_integral(2.0, 3) - (std::exp(2.0) - std::exp(-2.0)) / 2.0);
  }, 1e-12);
}

void tests_suite(Reporter& rep) {
  const double alpha = 0.05;
  for (double t : {0.3, 0.7, 1.5}) {
    rep.check("si closed form vs n=2 Y^2 test, theta=" + std::to_string(t), [=] {
      return std::abs(si_type2_closed(t, TestSpec{1, 2, 0.0, alpha, TestKind::SI}) - si_type2_n2(t, 1, 0.0, alpha).beta);
    }, 1e-8);
  }
  for (int n : {2, 3}) {
    rep.check("SI small-theta slope / ((1-alpha) n), n=" + std::to_string(n), [=] {
      return std::abs(si_small_theta_slope(TestSpec{1, n, 0.0, alpha, TestKind::SI}) / ((1.0 - alpha) * n) - 1.0);
    }, 5e-3);
  }
  rep.check("crossing witnesses found (m=1, n=3, N=0)", [=] {
    std::vector<double> grid;
    for (int i = 1; i <= 800; ++i) grid.push_back(0.05 * i);
    const CrossingResult r = crossing_check(alpha, grid);
    return (r.found_small && r.found_large) ? 0.0 : 1.0;
  }, 0.5);
  rep.check("HH Monte Carlo vs analytic (theta=0.5, 1e5 reps), in stderr", [=] {
    const TestSpec spec{1, 3, 0.0, alpha, TestKind::HH};
    const CVector theta = CVector::Constant(1, 0.5);
    const McEstimate mc = hh_type2_montecarlo(theta, SqueezeParam::zero(1), spec, 100000, 7);
    return std::abs(mc.estimate - hh_type2_analytic(theta, SqueezeParam::zero(1), spec)) / mc.stderr_;
  }, 4.0);
  rep.check("HH on r-family: analytic kappa vs closed form", [] {
    const CVector theta = CVector::Constant(1, 0.5);
    return std::abs(kappa(theta, SqueezeParam::r_family(1, 0.3), 0.2) - kappa_r_family(0.5, 0.3, 0.2));
  }, 1e-12);
}

}  // namespace

int run_verify(const std::string& suite, std::ostream& out) {
  if (suite != "fock" && suite != "distributions" && suite != "tests" && suite != "all") {
    throw std::invalid_argument("unknown suite '" + suite + "' (expected fock, distributions, tests or all)");
  }
  Reporter rep{out};
  if (suite == "distributions" || suite == "all") distributions_suite(rep);
  if (suite == "tests" || suite == "all") tests_suite(rep);
  if (suite == "fock" || suite == "all") fock_suite(rep);
  out << (rep.failures == 0 ? "all checks passed" : std::to_string(rep.failures) + " check(s) failed") << '\n';
  return rep.failures;
}

}  // namespace sitest
