#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include "longvid/filterbank.hpp"
#include "longvid/lowres_generator.hpp"
#include "longvid/resample.hpp"

using namespace longvid;

namespace {

SynthesisConfig bench_config() {
  SynthesisConfig c;
  c.channels = {64, 64, 64, 32, 32, 16, 16};
  c.scales = {{2, 1}, {2, 1}, {2, 2}, {2, 2}, {1, 2}, {2, 1}, {1, 1}};
  c.base_size = 4;
  c.temporal_divisor = 32;
  c.out_h = 32;
  c.out_w = 32;
  c.w_dim = 64;
  c.mapping_hidden = 64;
  return c;
}

void BM_EnrichNoise(benchmark::State& state) {
  auto bank = design_bank(state.range(0), 4, 64);
  auto noise = torch::randn({1, 256, NoiseStream::kChannels});
  for (auto _ : state) {
    benchmark::DoNotOptimize(enrich_tensor(noise, bank));
  }
}
BENCHMARK(BM_EnrichNoise)->Arg(8)->Arg(32)->Arg(128);

void BM_GeneratorForward(benchmark::State& state) {
  torch::NoGradGuard ng;
  torch::manual_seed(1);
  auto bank = design_bank(16, 4, 64);
  auto gen = LowresGenerator(bank, bench_config());
  gen->eval();
  int64_t t = state.range(0);
  int64_t ctx = context_padding(bank);
  auto noise = torch::randn({1, t + 2 * ctx, NoiseStream::kChannels});
  for (auto _ : state) {
    benchmark::DoNotOptimize(gen->forward(noise, t));
  }
}
BENCHMARK(BM_GeneratorForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_PrefilteredDownsample(benchmark::State& state) {
  auto x = torch::randn({4, 3, 256, 256});
  for (auto _ : state) {
    benchmark::DoNotOptimize(prefiltered_downsample(x, 4));
  }
}
BENCHMARK(BM_PrefilteredDownsample)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
