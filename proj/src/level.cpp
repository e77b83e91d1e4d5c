#include "sitest/level.hpp"

#include <cmath>
#include <stdexcept>

#include "sitest/common.hpp"

namespace sitest {

LevelSolution solve_level(const std::vector<double>& values, const std::vector<double>& null_mass, double alpha,
                          double hit_tol) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("solve_level: alpha must lie in [0, 1]");
  if (values.size() != null_mass.size() || values.empty()) {
    throw std::invalid_argument("solve_level: values and masses must be non-empty and aligned");
  }
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw std::invalid_argument("solve_level: values must be strictly increasing");
  }
  const double target = 1.0 - alpha;
  LevelSolution sol;

  if (target <= hit_tol) {
    // Reject everything: both thresholds below the spectrum.
    sol.s_below_spectrum = true;
    sol.degenerate = true;
    sol.s = sol.t = values.front() - 1.0;
    return sol;
  }

  double below = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double cum = below + null_mass[i];
    if (cum >= target - hit_tol) {
      sol.t = values[i];
      sol.t_index = static_cast<int>(i);
      sol.mass_t = cum;
      if (std::abs(cum - target) <= hit_tol) {
        sol.degenerate = true;
        sol.s = sol.t;
        sol.s_index = sol.t_index;
        sol.mass_s = cum;
        sol.w = 1.0;
        return sol;
      }
      if (i == 0) {
        sol.s_below_spectrum = true;
        sol.s = values.front() - 1.0;
      } else {
        sol.s = values[i - 1];
        sol.s_index = static_cast<int>(i) - 1;
      }
      sol.mass_s = below;
      sol.w = (target - below) / (cum - below);
      return sol;
    }
    below = cum;
  }
  // Target exceeds the represented null mass; tolerate truncation-sized gaps.
  if (target - below <= 1e-8) {
    sol.degenerate = true;
    sol.t_index = sol.s_index = static_cast<int>(values.size()) - 1;
    sol.s = sol.t = values.back();
    sol.mass_s = sol.mass_t = below;
    return sol;
  }
  throw ToleranceExhausted("solve_level: null mass " + std::to_string(below) + " cannot reach 1 - alpha");
}

double acceptance_probability(const LevelSolution& level, const std::vector<double>& weights) {
  auto cumulative = [&](int index) {
    double sum = 0.0;
    for (int i = 0; i <= index && i < static_cast<int>(weights.size()); ++i) sum += weights[i];
    return sum;
  };
  const double at_t = level.t_index < 0 ? 0.0 : cumulative(level.t_index);
  if (level.degenerate) return at_t;
  const double at_s = level.s_below_spectrum ? 0.0 : cumulative(level.s_index);
  return (1.0 - level.w) * at_s + level.w * at_t;
}

}  // namespace sitest
