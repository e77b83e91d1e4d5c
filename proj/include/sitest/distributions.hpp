#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "sitest/common.hpp"

namespace sitest {

/// pmf on the contiguous integer range [lo, lo + pmf.size() - 1]. Mass that
/// fell outside the stored range is carried in tail_mass.
struct IntegerDistribution {
  long lo = 0;
  std::vector<double> pmf;
  double tail_mass = 0.0;

  long hi() const { return lo + static_cast<long>(pmf.size()) - 1; }
  double at(long y) const;
  double total() const;
  double mean() const;
  double cdf(long y) const;
  cplx cf(double r) const;

  static IntegerDistribution point_mass(long y);
};

struct NoncentralFParams {
  double mu = 2.0;  // numerator degrees of freedom
  double nu = 1.0;  // denominator degrees of freedom
  double lambda = 0.0;

  void validate() const;
};

double noncentral_f_pdf(double f, const NoncentralFParams& p);
/// P(F <= c); c = +inf gives 1.
double noncentral_f_cdf(double c, const NoncentralFParams& p);
/// Upper-alpha point of the central F(mu, nu). Throws for alpha outside (0, 1).
double critical_point(double alpha, double mu, double nu);
/// I_x(mu/2 + 1, nu/2) with x = mu c / (mu c + nu): the weight that controls
/// the small-lambda slope of the noncentral cdf at c.
double hh_small_lambda_delta(double c, double mu, double nu);

IntegerDistribution poisson(double lambda, double tol = 1e-16);
/// Law of the number of successes before `shape` failures, success prob p.
IntegerDistribution neg_binomial(double shape, double p, double tol = 1e-16);
cplx neg_binomial_cf(double shape, double p, double r);

/// One-sided law A = F + sum_k k P_k with F ~ NB_m(N/(N+1)) and
/// P_k ~ Poisson(theta_norm^2 N^{k-1} / (N+1)^{k+1}); Y = A - A' for an
/// independent copy A'.
IntegerDistribution y_half_distribution(int m, double theta_norm, double N, double tol = 1e-15);
IntegerDistribution y_distribution(int m, double theta_norm, double N, double tol = 1e-15);
/// Law of Y^2 on {0, 1, ..., hi^2} (zero mass off the squares).
IntegerDistribution square_law(const IntegerDistribution& y);

cplx y_gamma(double N, double r);
cplx y_psi(double theta_norm, double N, double r);
cplx y_char_function(int m, double theta_norm, double N, double r);

/// pmf on [-support_bound, support_bound] from a characteristic function by
/// the trapezoid rule on [-pi, pi], doubling the grid until the pmf changes
/// by less than stable_tol. Throws ToleranceExhausted when more than 1e-8 of
/// the mass lies outside the support.
IntegerDistribution cf_invert(const std::function<cplx(double)>& cf, long support_bound, double stable_tol = 1e-10);

double beta_function(double x, double y);
/// int_0^pi exp(z cos phi) sin^{n-2} phi dphi.
double si_integral(double z, int n);
/// exp(-z) si_integral(z, n), finite for large z.
double si_integral_scaled(double z, int n);

double total_variation(const IntegerDistribution& a, const IntegerDistribution& b);

/// Two columns "value probability", then a footer "tail_mass <x>".
void write_distribution(std::ostream& out, const IntegerDistribution& dist);
IntegerDistribution read_distribution(std::istream& in);

}  // namespace sitest
