#include <benchmark/benchmark.h>

#include <filesystem>

#include "diagnet/data.hpp"
#include "diagnet/dynamics.hpp"
#include "diagnet/margins.hpp"
#include "diagnet/penalty.hpp"
#include "diagnet/regimes.hpp"

namespace {

using namespace diagnet;

const Dataset& fig_data() {
  static const Dataset ds = load_dataset(std::filesystem::path(DIAGNET_DATA_DIR) / "unique_l1.json");
  return ds;
}

void BM_MarginState(benchmark::State& state) {
  const Dataset ds = uniform_random_dataset(static_cast<std::size_t>(state.range(0)), 10, 0.0, 1.0, 1);
  const Vector w = Vector::LinSpaced(10, 0.1, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(margin_state(w, ds));
}
BENCHMARK(BM_MarginState)->Arg(4)->Arg(64)->Arg(1024);

void BM_NormalizedStep(benchmark::State& state) {
  const Dataset& ds = fig_data();
  StepperConfig cfg;
  cfg.eta = 1e-3;
  const SimState s0 = initial_state(NetParams::init(ds.dim(), static_cast<int>(state.range(0)), 1.0), ds);
  for (auto _ : state) benchmark::DoNotOptimize(step(s0, ds, cfg));
}
BENCHMARK(BM_NormalizedStep)->Arg(2)->Arg(3)->Arg(10);

// Whole trajectory to gamma_tilde = 1000 at alpha = 1, the rich-regime run.
void BM_RunToTarget(benchmark::State& state) {
  const Dataset& ds = fig_data();
  StepperConfig cfg;
  cfg.eta = 1e-3;
  cfg.gamma_tilde_target = 1000.0;
  cfg.record_every = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(run(NetParams::init(ds.dim(), 2, 1.0), ds, cfg));
}
BENCHMARK(BM_RunToTarget)->Unit(benchmark::kMillisecond);

void BM_HInverse(benchmark::State& state) {
  double s = 0.37;
  for (auto _ : state) {
    benchmark::DoNotOptimize(h_inverse(s, 3));
    s = s * 1.0001 + 1e-3;
  }
}
BENCHMARK(BM_HInverse);

void BM_L2Solver(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(l2_max_margin(fig_data()));
}
BENCHMARK(BM_L2Solver);

void BM_L1Solver(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(l1_max_margin(fig_data()));
}
BENCHMARK(BM_L1Solver);

void BM_QMuSolver(benchmark::State& state) {
  const double mu = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(q_mu_max_margin(fig_data(), {2, mu}));
}
BENCHMARK(BM_QMuSolver)->Arg(1)->Arg(100)->Arg(10000);

void BM_TangentKernel(benchmark::State& state) {
  const Dataset ds = uniform_random_dataset(static_cast<std::size_t>(state.range(0)), 10, 0.0, 1.0, 1);
  const NetParams p = NetParams::init(10, 3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(tangent_kernel(p, ds));
}
BENCHMARK(BM_TangentKernel)->Arg(4)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
