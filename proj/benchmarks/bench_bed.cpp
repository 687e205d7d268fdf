#include <benchmark/benchmark.h>

#include "aoecr/bed/bed_model.h"
#include "aoecr/command/labels.h"

using namespace aoecr;

static void BM_Tick(benchmark::State& state) {
  bed::BedModel b;
  const auto plan = *command::plan_from_label("leg_exercise");
  for (auto _ : state) {
    if (b.idle()) b.start_plan(plan);
    b.tick(0.1);
  }
}
BENCHMARK(BM_Tick);

static void BM_EstimateDuration(benchmark::State& state) {
  const bed::BedModel b;
  const auto plan = *command::plan_from_label("back_rocking");
  for (auto _ : state) benchmark::DoNotOptimize(b.estimate_duration(plan));
}
BENCHMARK(BM_EstimateDuration);

BENCHMARK_MAIN();
