#include <gtest/gtest.h>

#include <vector>

#include "sitest/level.hpp"

using sitest::acceptance_probability;
using sitest::LevelSolution;
using sitest::solve_level;

TEST(Level, InteriorSolution) {
  const std::vector<double> v{0.0, 1.0, 4.0};
  const std::vector<double> p{0.5, 0.3, 0.2};
  const LevelSolution sol = solve_level(v, p, 0.3);  // target 0.7
  EXPECT_DOUBLE_EQ(sol.s, 0.0);
  EXPECT_DOUBLE_EQ(sol.t, 1.0);
  EXPECT_NEAR(sol.w, (0.7 - 0.5) / 0.3, 1e-15);
  EXPECT_FALSE(sol.degenerate);
  EXPECT_NEAR(acceptance_probability(sol, p), 0.7, 1e-15);
}

TEST(Level, ExactHitIsDegenerate) {
  const std::vector<double> v{0.0, 1.0, 4.0};
  const std::vector<double> p{0.5, 0.3, 0.2};
  const LevelSolution sol = solve_level(v, p, 0.5);
  EXPECT_TRUE(sol.degenerate);
  EXPECT_DOUBLE_EQ(sol.s, sol.t);
  EXPECT_DOUBLE_EQ(sol.w, 1.0);
  EXPECT_NEAR(acceptance_probability(sol, p), 0.5, 1e-15);
}

TEST(Level, BelowSpectrum) {
  const std::vector<double> v{0.0, 2.0};
  const std::vector<double> p{0.9, 0.1};
  const LevelSolution sol = solve_level(v, p, 0.5);
  EXPECT_TRUE(sol.s_below_spectrum);
  EXPECT_LT(sol.s, 0.0);
  EXPECT_DOUBLE_EQ(sol.t, 0.0);
  EXPECT_NEAR(sol.w, 0.5 / 0.9, 1e-15);
  // Alternative weights: only the t-part contributes.
  const std::vector<double> q{0.3, 0.7};
  EXPECT_NEAR(acceptance_probability(sol, q), sol.w * 0.3, 1e-15);
}

TEST(Level, AlphaOneRejectsAll) {
  const LevelSolution sol = solve_level({1.0, 2.0}, {0.5, 0.5}, 1.0);
  EXPECT_NEAR(acceptance_probability(sol, {0.5, 0.5}), 0.0, 1e-15);
}

TEST(Level, AlphaZeroAcceptsAll) {
  const std::vector<double> p{0.25, 0.75};
  const LevelSolution sol = solve_level({1.0, 2.0}, p, 0.0);
  EXPECT_NEAR(acceptance_probability(sol, p), 1.0, 1e-12);
}

TEST(Level, NullAcceptanceEqualsOneMinusAlphaOnGrid) {
  const std::vector<double> v{0.0, 1.0, 2.0, 3.0, 5.0};
  const std::vector<double> p{0.1, 0.2, 0.3, 0.25, 0.15};
  for (double a = 0.01; a < 1.0; a += 0.01) {
    const LevelSolution sol = solve_level(v, p, a);
    EXPECT_NEAR(acceptance_probability(sol, p), 1.0 - a, 1e-12) << a;
    EXPECT_LE(sol.s, sol.t);
    EXPECT_GT(sol.w, 0.0);
    EXPECT_LE(sol.w, 1.0);
  }
}

TEST(Level, Errors) {
  EXPECT_THROW(solve_level({0.0}, {1.0}, -0.1), std::invalid_argument);
  EXPECT_THROW(solve_level({0.0}, {1.0}, 1.1), std::invalid_argument);
  EXPECT_THROW(solve_level({0.0, 1.0}, {1.0}, 0.5), std::invalid_argument);
  EXPECT_THROW(solve_level({1.0, 0.0}, {0.5, 0.5}, 0.5), std::invalid_argument);
  EXPECT_THROW(solve_level({}, {}, 0.5), std::invalid_argument);
}
