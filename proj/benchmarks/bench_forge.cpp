#include <benchmark/benchmark.h>

#include "aoecr/forge/dataset.h"
#include "aoecr/util/rng.h"

using namespace aoecr;

static void BM_Degrade(benchmark::State& state) {
  const auto level = static_cast<Clarity>(state.range(0));
  const std::string request = "I feel anxious lying like this, could you raise the backrest so I can sit up?";
  auto rng = stream_rng(1, "bench");
  for (auto _ : state) benchmark::DoNotOptimize(forge::degrade_clarity(request, level, rng));
}
BENCHMARK(BM_Degrade)->DenseRange(1, 3);

static void BM_TokenRetention(benchmark::State& state) {
  const std::string a = "I feel anxious lying like this, could you raise the backrest so I can sit up?";
  const std::string b = "um, I f-f-feel anxious, could you raise so I sit up?";
  for (auto _ : state) benchmark::DoNotOptimize(forge::token_retention(a, b));
}
BENCHMARK(BM_TokenRetention);

BENCHMARK_MAIN();
