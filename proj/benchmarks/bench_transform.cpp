#include <random>

#include <benchmark/benchmark.h>

#include "freqlab/transform.hpp"

namespace {

freqlab::GrayImage noise_image(int n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  freqlab::Matrix m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return freqlab::GrayImage(m);
}

void BM_Dct2(benchmark::State& state) {
  const auto img = noise_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(freqlab::dct2(img));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Dct2)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

void BM_Dct2Naive(benchmark::State& state) {
  const auto img = noise_image(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(freqlab::dct2_naive(img));
}
BENCHMARK(BM_Dct2Naive)->Arg(16)->Arg(32);

void BM_Idct2(benchmark::State& state) {
  const auto spec = freqlab::dct2(noise_image(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(freqlab::idct2(spec));
}
BENCHMARK(BM_Idct2)->Arg(128);

void BM_LogDctFeatures(benchmark::State& state) {
  const auto img = noise_image(128);
  for (auto _ : state) benchmark::DoNotOptimize(freqlab::log_scale(freqlab::dct2(img)));
}
BENCHMARK(BM_LogDctFeatures);

}  // namespace

BENCHMARK_MAIN();
