#include <benchmark/benchmark.h>

#include "freqlab/photo.hpp"
#include "freqlab/resample.hpp"

namespace {

void BM_SynthFake(benchmark::State& state) {
  const auto photo = freqlab::synthesize_photo(3);
  const auto method = static_cast<freqlab::UpsampleMethod>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(freqlab::synth_fake(photo, method, 2));
}
BENCHMARK(BM_SynthFake)
    ->Arg(static_cast<int>(freqlab::UpsampleMethod::NearestNeighbor))
    ->Arg(static_cast<int>(freqlab::UpsampleMethod::Bilinear))
    ->Arg(static_cast<int>(freqlab::UpsampleMethod::Binomial5));

void BM_SynthesizePhoto(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(freqlab::synthesize_photo(seed++));
}
BENCHMARK(BM_SynthesizePhoto);

}  // namespace
