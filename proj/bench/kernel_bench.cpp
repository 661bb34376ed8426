// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include <random>

#include "topicllm/kernels.hpp"

namespace {

using namespace topicllm::kernels;

RowMatrix random_rows(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  RowMatrix m{n, dim, std::vector<double>(n * dim)};
  for (double& x : m.data) x = gauss(rng);
  return m;
}

void BM_EmptyCellSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(serial::count_trials_with_empty_cell(
        static_cast<std::uint64_t>(state.range(0)), 102, 10'000, 1));
  }
}

void BM_EmptyCellParallel(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(parallel::count_trials_with_empty_cell(
        static_cast<std::uint64_t>(state.range(0)), 102, 10'000, 1));
  }
}

void BM_CosineSerial(benchmark::State& state) {
  const auto m = random_rows(static_cast<std::size_t>(state.range(0)), 384);
  for (auto _ : state) benchmark::DoNotOptimize(serial::cosine_matrix(m));
}

void BM_CosineParallel(benchmark::State& state) {
  const auto m = random_rows(static_cast<std::size_t>(state.range(0)), 384);
  for (auto _ : state) benchmark::DoNotOptimize(parallel::cosine_matrix(m));
}

}  // namespace

BENCHMARK(BM_EmptyCellSerial)->Arg(600)->Arg(1100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmptyCellParallel)->Arg(600)->Arg(1100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CosineSerial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CosineParallel)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
