#include <iostream>

#include <CLI11.hpp>

#include "commands.h"

int main(int argc, char** argv) {
  using namespace aoecr::cli;
  CLI::App app{"aoecr: nursing-bed agent, information platform and evaluation tools"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config_path, "Config file (key = value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();

  auto* agent = app.add_subcommand("serve-agent", "Run the cloud agent against an MQTT broker");
  ServeAgentArgs agent_args;

  auto* platform = app.add_subcommand("serve-platform",
                                      "Run the HTTP/WS platform with its in-process broker");
  ServePlatformArgs platform_args;
  platform->add_flag("!--no-agent", platform_args.agent,
                     "Do not host the agent (run serve-agent separately)");
  platform->add_flag("!--no-bed", platform_args.bed, "Do not host the bed simulator");

  auto* bed = app.add_subcommand("simulate-bed", "Simulate a plan offline or serve the bed over MQTT");
  SimulateBedArgs bed_args;
  bed->add_option("--plan", bed_args.plan_json, "Command plan JSON");
  bed->add_option("--label", bed_args.label, "Action label, e.g. backrest_extend");
  bed->add_option("--degree", bed_args.degree, "Degree phrase applied to the label, e.g. \"a bit\"");
  bed->add_flag("--serve", bed_args.serve, "Run the bed loop against the configured MQTT broker");
  bed->add_option("--max-seconds", bed_args.max_seconds, "Simulation horizon")->capture_default_str();

  auto* forge = app.add_subcommand("forge-dataset", "Generate the four-clarity dialogue dataset");
  ForgeArgs forge_args;
  forge->add_option("--seeds", forge_args.seeds, "Scenario seeds (4 pairs each)")->capture_default_str();
  forge->add_option("--seed", forge_args.seed, "Master seed")->capture_default_str();
  forge->add_option("-o,--out", forge_args.out, "Dataset JSONL path")->capture_default_str();
  forge->add_option("--finetune", forge_args.finetune_out, "Also export instruction/output JSONL");
  forge->add_option("--stats", forge_args.stats_out, "Also write a markdown statistics table");

  auto* eval = app.add_subcommand("evaluate", "Command accuracy ablation and response scoring");
  EvaluateArgs eval_args;
  eval->add_option("--dataset", eval_args.dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--stage", eval_args.stage,
                   "prompt_only, prompt_finetuned_proxy, full_with_cos or all")
      ->capture_default_str();
  eval->add_option("--profile", eval_args.profile, "Fault profile JSON")->check(CLI::ExistingFile);
  eval->add_option("-o,--out", eval_args.out, "Report directory")->capture_default_str();
  eval->add_option("--seed", eval_args.seed, "Oracle seed")->capture_default_str();
  eval->add_option("--responses", eval_args.responses,
                   "Score optimized responses for the first N pairs (0 skips)")
      ->capture_default_str();

  auto* repl_cmd = app.add_subcommand("repl", "Chat with a local in-process stack");
  ReplArgs repl_args;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    std::cerr << app.help();
    return code;
  }

  if (agent->parsed()) return serve_agent(common, agent_args);
  if (platform->parsed()) return serve_platform(common, platform_args);
  if (bed->parsed()) return simulate_bed(common, bed_args);
  if (forge->parsed()) return forge_dataset(common, forge_args);
  if (eval->parsed()) return evaluate(common, eval_args);
  if (repl_cmd->parsed()) return repl(common, repl_args);
  std::cerr << app.help();
  return 2;
}
