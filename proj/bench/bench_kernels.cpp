// Serial reference vs OpenMP kernel timings.
#include <benchmark/benchmark.h>

#include <vector>

#include "mrgr/rng.hpp"
#include "mrgr/diffcore/kernels.hpp"
#include "mrgr/envs/battle.hpp"
#include "mrgr/regret/regret.hpp"
#include "mrgr/trainer/trainer.hpp"

namespace {

using namespace mrgr;

std::vector<double> random_matrix(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = uniform01(rng) - 0.5;
  return x;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n * n, 1), b = random_matrix(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      diff::kernels::gemm_parallel(a, b, c, n, n, n, false, false);
    } else {
      diff::kernels::gemm_serial(a, b, c, n, n, n, false, false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/parallel")->Arg(64)->Arg(256);

template <bool Parallel>
void BM_Consistency(benchmark::State& state) {
  for (auto _ : state) {
    auto r = Parallel ? regret::consistency_check(3, 6, 2000, 7)
                      : regret::consistency_check_serial(3, 6, 2000, 7);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Consistency<false>)->Name("consistency/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Consistency<true>)->Name("consistency/parallel")->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_Rollouts(benchmark::State& state) {
  trainer::TrainConfig cfg;
  cfg.method = trainer::Method::bvrm_shaping;
  cfg.batch_episodes = 4;
  cfg.particles = 8;
  cfg.single_thread = !Parallel;
  const envs::BattleEnv env(envs::BattleConfig::small());
  const trainer::Trainer tr(cfg, env, 3);
  std::size_t it = 0;
  for (auto _ : state) {
    auto eps = tr.collect(it++);
    benchmark::DoNotOptimize(eps);
  }
}
BENCHMARK(BM_Rollouts<false>)->Name("rollouts/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rollouts<true>)->Name("rollouts/parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
