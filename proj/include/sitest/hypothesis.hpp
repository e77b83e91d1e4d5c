#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sitest/common.hpp"
#include "sitest/level.hpp"
#include "sitest/phase_space.hpp"

namespace sitest {

enum class TestKind { HH, SI };

struct TestSpec {
  int m = 1;
  int n = 3;
  double N = 0.0;
  double alpha = 0.05;
  TestKind kind = TestKind::HH;

  /// HH needs n >= 2m + 1 and 0 < alpha < 1; SI needs n >= 2 and alpha in [0, 1].
  void validate() const;
  double mu_dof() const { return 2.0 * m; }
  double nu_dof() const { return static_cast<double>(n - 2 * m); }
};

// --- heterodyne-Hotelling -------------------------------------------------------

/// F_HH = (n-1)^{-1} (nu/mu) T^2 from samples stored as columns (2m x n).
/// Throws std::domain_error when the sample covariance is singular.
double hotelling_F(const RMatrix& samples);

/// Noncentral-F type II error with lambda = n kappa.
double hh_type2_from_kappa(double kappa_value, const TestSpec& spec);
double hh_type2_analytic(const CVector& theta, const SqueezeParam& eta, const TestSpec& spec);

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  long reps = 0;
};

/// Acceptance frequency of {F_HH <= c} over `reps` simulated heterodyne data
/// sets. Replicate r draws from Philox stream (seed, experiment, r), so the
/// parallel and serial paths agree exactly.
McEstimate hh_type2_montecarlo(const CVector& theta, const SqueezeParam& eta, const TestSpec& spec, long reps,
                               std::uint64_t seed, std::uint64_t experiment = 0, bool parallel = true);

/// F_HH for each replicate (same streams as hh_type2_montecarlo).
std::vector<double> hh_statistics(const CVector& theta, const SqueezeParam& eta, const TestSpec& spec, long reps,
                                  std::uint64_t seed, std::uint64_t experiment = 0, bool parallel = true);

/// sup_x |F_n(x) - F(x)| of a sample against a continuous cdf.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf);

/// Asymptotic Kolmogorov critical value sqrt(-log(a/2)/2)/sqrt(n).
double ks_critical_value(double significance, std::size_t n);

// --- squeezing-invariant ------------------------------------------------------------

/// Pure-state closed form (1-alpha) e^{-n|theta|^2} B((n-1)/2, 1/2)^{-1}
/// int_0^pi e^{n|theta|^2 cos phi} sin^{n-2} phi dphi. Throws for N != 0.
double si_type2_closed(double theta_norm, const TestSpec& spec);

struct SiN2Result {
  double beta = 0.0;
  LevelSolution level;
  double null_tail = 0.0;
  double alt_tail = 0.0;
};
/// n = 2 randomized test on X = Y^2.
SiN2Result si_type2_n2(double theta_norm, int m, double N, double alpha);

enum class SiRoute { Closed, N2 };
/// Richardson limit of (1-alpha-beta)/|theta|^2 as theta -> 0 from
/// theta in {1e-2, 5e-3, 2.5e-3}.
double si_small_theta_slope(const TestSpec& spec, SiRoute route = SiRoute::Closed);

struct CrossingResult {
  bool found_small = false;
  bool found_large = false;
  double theta_small = 0.0;  // beta_SI < beta_HH
  double theta_large = 0.0;  // beta_SI > beta_HH
  std::vector<double> grid;
  std::vector<double> beta_si;
  std::vector<double> beta_hh;
};
/// m = 1, n = 3, N = 0, eta = 0 scan.
CrossingResult crossing_check(double alpha, const std::vector<double>& grid);

// --- error curves --------------------------------------------------------------------

enum class ThetaDirection { Real, Imaginary };

struct EtaVariant {
  std::string label;  // column suffix
  SqueezeParam eta;
  ThetaDirection direction = ThetaDirection::Real;
};

/// Displacement of norm theta_norm spread evenly over the m modes.
CVector theta_along(double theta_norm, int m, ThetaDirection direction);

struct CurveConfig {
  TestSpec spec;
  std::vector<double> theta_grid;
  std::vector<EtaVariant> etas;
  long reps = 0;  // 0 = analytic only
  std::uint64_t seed = 1;
  int fock_cutoff = 0;  // used for the SI column when n > 2 and N > 0
};

struct ErrorCurve {
  CurveConfig config;
  std::vector<double> beta_si;
  std::vector<std::vector<double>> beta_hh;  // [eta][theta]
  std::vector<std::vector<McEstimate>> mc_hh;
  std::string si_method;
};

ErrorCurve evaluate_curve(const CurveConfig& config, bool parallel = true);
/// Comment header echoing the config, then a CSV header and one row per theta.
void write_curve_csv(std::ostream& out, const ErrorCurve& curve);

// ---------------------------------------------------------------------------

template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

}  // namespace sitest
