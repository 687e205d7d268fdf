#include <benchmark/benchmark.h>

#include "aoecr/command/command.h"
#include "aoecr/command/labels.h"

using namespace aoecr;

static void BM_Serialize(benchmark::State& state) {
  const auto plan = *command::plan_from_label("leg_exercise");
  for (auto _ : state) benchmark::DoNotOptimize(command::serialize(plan));
}
BENCHMARK(BM_Serialize);

static void BM_Parse(benchmark::State& state) {
  const auto text = command::serialize(*command::plan_from_label("leg_exercise"));
  for (auto _ : state) benchmark::DoNotOptimize(command::parse_plan(text));
}
BENCHMARK(BM_Parse);

static void BM_Validate(benchmark::State& state) {
  const auto plan = *command::plan_from_label("lie_flat");
  for (auto _ : state) benchmark::DoNotOptimize(command::validate_plan(plan));
}
BENCHMARK(BM_Validate);

BENCHMARK_MAIN();
