#pragma once

#include <vector>

namespace sitest {

/// Solution (s, t, w) of the randomized level equation
///   1 - alpha = (1 - w) M(s) + w M(t),  s < t,  0 < w <= 1,
/// on a discrete spectrum, where M(x) is the null mass of eigenvalues <= x.
///
/// `s_below_spectrum` marks s < min eigenvalue (M(s) = 0). When the
/// cumulative mass hits 1 - alpha exactly at some eigenvalue the solution is
/// degenerate: t = s, w = 1.
struct LevelSolution {
  double s = 0.0;
  double t = 0.0;
  double w = 1.0;
  int s_index = -1;  // index of s in the value list, -1 when below spectrum
  int t_index = -1;
  bool s_below_spectrum = false;
  bool degenerate = false;
  double mass_s = 0.0;  // M(s)
  double mass_t = 0.0;  // M(t)
};

/// `values` sorted ascending and distinct; `null_mass` the null weight of each.
/// Throws std::invalid_argument for alpha outside [0, 1] or inconsistent input.
LevelSolution solve_level(const std::vector<double>& values, const std::vector<double>& null_mass, double alpha,
                          double hit_tol = 1e-12);

/// (1 - w) P(X <= s) + w P(X <= t) for weights aligned with `values`.
double acceptance_probability(const LevelSolution& level, const std::vector<double>& weights);

}  // namespace sitest
