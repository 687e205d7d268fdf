#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace aoecr::cli {

struct Common {
  std::string config_path;  // empty: defaults plus environment
  std::string log_level = "info";
};

struct ServeAgentArgs {};

struct ServePlatformArgs {
  bool agent = true;
  bool bed = true;
};

struct SimulateBedArgs {
  std::string plan_json;
  std::string label;
  std::string degree;
  bool serve = false;
  double max_seconds = 120.0;
};

struct ForgeArgs {
  std::size_t seeds = 400;
  std::uint64_t seed = 1;
  std::string out = "pn-i.jsonl";
  std::string finetune_out;
  std::string stats_out;
};

struct EvaluateArgs {
  std::string dataset;
  std::string stage = "all";
  std::string profile;
  std::string out = "report";
  std::uint64_t seed = 1;
  std::size_t responses = 0;  // sample size for response scoring, 0 skips it
};

struct ReplArgs {};

int serve_agent(const Common& common, const ServeAgentArgs& args);
int serve_platform(const Common& common, const ServePlatformArgs& args);
int simulate_bed(const Common& common, const SimulateBedArgs& args);
int forge_dataset(const Common& common, const ForgeArgs& args);
int evaluate(const Common& common, const EvaluateArgs& args);
int repl(const Common& common, const ReplArgs& args);

}  // namespace aoecr::cli
