#include <benchmark/benchmark.h>

#include "sitest/fock.hpp"
#include "sitest/hypothesis.hpp"

namespace {

using namespace sitest;

void BM_HhMonteCarlo(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const TestSpec spec{1, 3, 0.0, 0.05, TestKind::HH};
  const CVector theta = CVector::Constant(1, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hh_type2_montecarlo(theta, SqueezeParam::zero(1), spec, 100000, 1, 0, parallel));
  }
}
BENCHMARK(BM_HhMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TinvSpectrum(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const fock::FockConfig cfg(1, 3, 16);
  for (auto _ : state) {
    fock::TinvSpectrum spec(cfg, parallel);
    benchmark::DoNotOptimize(spec.distinct_values().size());
  }
}
BENCHMARK(BM_TinvSpectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Curve(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  CurveConfig cfg;
  for (int i = 0; i <= 60; ++i) cfg.theta_grid.push_back(0.05 * i);
  cfg.etas = {{"eta0", SqueezeParam::zero(1), ThetaDirection::Real}};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_curve(cfg, parallel).beta_si.size());
}
BENCHMARK(BM_Curve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
