#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "freqlab/cnn.hpp"

namespace {

freqlab::ImageBatch random_batch(int n, int size) {
  freqlab::ImageBatch batch(n, 1, size, size);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : batch.data) v = u(rng);
  return batch;
}

void BM_CnnForward(benchmark::State& state) {
  const auto model = freqlab::CnnModel::initialized(freqlab::CnnShape{}, 1);
  const auto batch = random_batch(static_cast<int>(state.range(0)), 128);
  for (auto _ : state) benchmark::DoNotOptimize(freqlab::forward(model, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CnnForward)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_CnnBackward(benchmark::State& state) {
  const auto model = freqlab::CnnModel::initialized(freqlab::CnnShape{}, 1);
  const int n = static_cast<int>(state.range(0));
  const auto batch = random_batch(n, 128);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 5;
  for (auto _ : state) benchmark::DoNotOptimize(freqlab::backward(model, batch, labels));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CnnBackward)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
