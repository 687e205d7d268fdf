#include <benchmark/benchmark.h>

#include "aoecr/cos/pipeline.h"
#include "aoecr/llm/oracle.h"

using namespace aoecr;

static void BM_HandleRequest(benchmark::State& state) {
  llm::OracleConfig cfg;
  cfg.corruption = {0.3, 0.3, 0.3, 0.3};
  cfg.detection = 0.9;
  cos::PipelineOptions opts;
  opts.self_check = state.range(0) != 0;
  opts.classify = opts.self_check;
  cos::CosPipeline pipeline(std::make_shared<llm::OracleBackend>(cfg), opts);
  std::uint64_t i = 0;
  for (auto _ : state) {
    cos::SessionContext ctx;
    ctx.turn_id = "b" + std::to_string(i++);
    benchmark::DoNotOptimize(pipeline.handle_request(ctx, "Could you raise the backrest so I can sit up?"));
  }
}
BENCHMARK(BM_HandleRequest)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
