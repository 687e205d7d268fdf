#include "commands.h"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "aoecr/bed/bed_model.h"
#include "aoecr/command/labels.h"
#include "aoecr/eval/harness.h"
#include "aoecr/eval/report.h"
#include "aoecr/forge/dataset.h"
#include "aoecr/llm/gateway.h"
#include "aoecr/platform/agent_service.h"
#include "aoecr/platform/bed_service.h"
#include "aoecr/platform/broker.h"
#include "aoecr/platform/config.h"
#include "aoecr/platform/mqtt.h"
#include "aoecr/platform/server.h"

namespace aoecr::cli {

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

std::optional<platform::RuntimeConfig> load_runtime(const Common& common) {
  spdlog::set_level(spdlog::level::from_str(common.log_level));
  auto config = common.config_path.empty() ? Expected<platform::Config, platform::ConfigError>(
                                                 platform::Config::defaults())
                                           : platform::Config::load(common.config_path);
  if (!config) {
    std::cerr << "config error: " << config.error().what() << "\n";
    return std::nullopt;
  }
  config->apply_env();
  auto rc = platform::runtime_config(*config);
  if (!rc) {
    std::cerr << "config error: " << rc.error().what() << "\n";
    return std::nullopt;
  }
  return std::move(rc).value();
}

struct Backends {
  llm::BackendPtr agent;
  llm::BackendPtr expert;
};

std::optional<Backends> make_backends(const platform::RuntimeConfig& rc) {
  auto backend = llm::make_backend(rc.backend);
  if (!backend) {
    std::cerr << "backend error: " << backend.error() << "\n";
    return std::nullopt;
  }
  Backends b;
  b.agent = *backend;
  if (rc.expert_enabled) b.expert = *backend;
  return b;
}

Expected<platform::BrokerPtr, std::string> mqtt_broker(const platform::RuntimeConfig& rc,
                                                       std::string_view role) {
  platform::MqttClientConfig mc;
  mc.host = rc.broker.host;
  mc.port = rc.broker.port;
  mc.client_id = rc.broker.client_id + "-" + std::string(role);
  auto client = platform::MqttClientBroker::connect(mc);
  if (!client) return unexpected(client.error());
  return platform::BrokerPtr(*client);
}

std::string describe(const nlohmann::json& decision) {
  const auto kind = decision.value("kind", "");
  if (kind == "execute") {
    return decision.value("response", "") + "\n  [plan] " + decision.value("plan", nlohmann::json()).dump();
  }
  if (kind == "clarify") return decision.value("question", "") + "\n  [clarification requested]";
  return "[refused] " + decision.value("reason", "");
}

}  // namespace

int serve_agent(const Common& common, const ServeAgentArgs&) {
  auto rc = load_runtime(common);
  if (!rc) return 2;
  if (rc->broker.kind != "mqtt") {
    std::cerr << "serve-agent talks to the platform over MQTT; set broker.kind = mqtt "
                 "(serve-platform hosts the agent itself otherwise)\n";
    return 2;
  }
  auto backends = make_backends(*rc);
  if (!backends) return 2;
  auto broker = mqtt_broker(*rc, "agent");
  if (!broker) {
    std::cerr << "broker error: " << broker.error() << "\n";
    return 1;
  }
  platform::AgentService agent(*broker, backends->agent, backends->expert, rc->agent);
  agent.start();
  spdlog::info("agent serving via mqtt {}:{}", rc->broker.host, rc->broker.port);
  wait_for_signal();
  agent.stop();
  return 0;
}

int serve_platform(const Common& common, const ServePlatformArgs& args) {
  auto rc = load_runtime(common);
  if (!rc) return 2;
  auto broker = std::make_shared<platform::InProcessBroker>();

  std::optional<platform::MqttListener> listener;
  if (rc->broker.listen_port != 0) {
    listener.emplace(broker, rc->server.host, rc->broker.listen_port);
    if (auto r = listener->start(); !r) {
      std::cerr << r.error() << "\n";
      return 1;
    }
  }

  std::unique_ptr<platform::BedService> bed;
  if (args.bed) {
    bed = std::make_unique<platform::BedService>(broker, rc->bed);
    bed->start();
  }
  std::unique_ptr<platform::AgentService> agent;
  if (args.agent) {
    auto backends = make_backends(*rc);
    if (!backends) return 2;
    agent = std::make_unique<platform::AgentService>(broker, backends->agent, backends->expert,
                                                     rc->agent);
    agent->start();
  }

  platform::PlatformServer server(broker, rc->agent.store_dir, rc->server);
  auto port = server.start();
  if (!port) {
    std::cerr << port.error() << "\n";
    return 1;
  }
  std::cout << "platform listening on http://" << rc->server.host << ":" << *port << std::endl;
  wait_for_signal();
  server.stop();
  if (agent) agent->stop();
  if (bed) bed->stop();
  if (listener) listener->stop();
  return 0;
}

int simulate_bed(const Common& common, const SimulateBedArgs& args) {
  auto rc = load_runtime(common);
  if (!rc) return 2;

  if (args.serve) {
    if (rc->broker.kind != "mqtt") {
      std::cerr << "simulate-bed --serve needs broker.kind = mqtt\n";
      return 2;
    }
    auto broker = mqtt_broker(*rc, "bed");
    if (!broker) {
      std::cerr << "broker error: " << broker.error() << "\n";
      return 1;
    }
    platform::BedService bed(*broker, rc->bed);
    bed.start();
    wait_for_signal();
    bed.stop();
    return 0;
  }

  command::CommandPlan plan;
  if (!args.plan_json.empty()) {
    auto parsed = command::parse_plan(args.plan_json);
    if (!parsed) {
      std::cerr << "plan error at " << parsed.error().path << ": " << parsed.error().reason << "\n";
      return 2;
    }
    plan = *parsed;
  } else if (!args.label.empty()) {
    std::optional<command::DegreeModifier> degree;
    if (!args.degree.empty()) {
      degree = rc->agent.pipeline.degrees.match(args.degree);
      if (!degree) {
        std::cerr << "unknown degree phrase '" << args.degree << "'\n";
        return 2;
      }
    }
    auto p = command::plan_from_label(args.label, degree);
    if (!p) {
      std::cerr << "unknown label '" << args.label << "'\n";
      return 2;
    }
    plan = *p;
  } else {
    std::cerr << "simulate-bed needs --plan, --label or --serve\n";
    return 2;
  }
  if (auto v = command::validate_plan(plan, {}); !v.empty()) {
    std::cerr << "invalid plan: " << v.front().path << " " << v.front().reason << "\n";
    return 2;
  }

  bed::BedModel model(rc->bed.bed);
  const double estimate = model.estimate_duration(plan);
  model.start_plan(plan);
  std::cout << bed::to_json(model.telemetry()).dump() << "\n";
  const double dt = rc->bed.bed.tick_seconds;
  while (!model.idle() && model.state().clock < args.max_seconds) {
    model.tick(dt);
    std::cout << bed::to_json(model.telemetry()).dump() << "\n";
  }
  std::cout << nlohmann::json{{"plan", nlohmann::json::parse(command::serialize(plan))},
                              {"estimated_seconds", estimate},
                              {"simulated_seconds", model.state().clock}}
                   .dump()
            << "\n";
  return model.idle() ? 0 : 1;
}

int forge_dataset(const Common& common, const ForgeArgs& args) {
  auto rc = load_runtime(common);
  if (!rc) return 2;
  auto backend = llm::make_backend(rc->backend);
  if (!backend) {
    std::cerr << "backend error: " << backend.error() << "\n";
    return 2;
  }
  const auto seeds = forge::make_seeds(args.seeds, args.seed);
  auto result = forge::forge(seeds, **backend, **backend, args.seed);
  for (const auto& r : result.rejected) spdlog::warn("rejected {}", r);
  if (auto w = forge::write_dataset(result.dataset, args.out); !w) {
    std::cerr << w.error() << "\n";
    return 1;
  }
  if (!args.finetune_out.empty()) {
    if (auto w = forge::export_finetune(result.dataset, args.finetune_out); !w) {
      std::cerr << w.error() << "\n";
      return 1;
    }
  }
  const auto stats = forge::dataset_stats(result.dataset);
  if (!args.stats_out.empty()) {
    std::ofstream out(args.stats_out, std::ios::binary | std::ios::trunc);
    out << forge::stats_to_markdown(stats);
    if (!out) {
      std::cerr << "cannot write " << args.stats_out << "\n";
      return 1;
    }
  }
  std::cout << "wrote " << result.dataset.size() << " pairs to " << args.out << " ("
            << result.rejected.size() << " seeds rejected)\n";
  return 0;
}

int evaluate(const Common& common, const EvaluateArgs& args) {
  auto rc = load_runtime(common);
  if (!rc) return 2;
  auto dataset = forge::read_dataset(args.dataset);
  if (!dataset) {
    std::cerr << dataset.error() << "\n";
    return 2;
  }
  eval::EvalConfig cfg;
  cfg.seed = args.seed;
  if (!args.profile.empty()) {
    auto profile = eval::load_fault_profile(args.profile);
    if (!profile) {
      std::cerr << profile.error() << "\n";
      return 2;
    }
    cfg.profile = *profile;
  }
  if (rc->backend.kind != llm::BackendConfig::Kind::kOracle) {
    auto backend = llm::make_backend(rc->backend);
    if (!backend) {
      std::cerr << "backend error: " << backend.error() << "\n";
      return 2;
    }
    cfg.backend = *backend;
  }

  eval::EvalReports reports;
  if (args.stage == "all") {
    reports.ablation = eval::run_ablation(*dataset, cfg);
  } else {
    auto stage = eval::stage_from_string(args.stage);
    if (!stage) {
      std::cerr << "unknown stage '" << args.stage << "'\n";
      return 2;
    }
    reports.ablation.push_back(eval::evaluate_commands(*dataset, *stage, cfg));
  }

  if (args.responses > 0) {
    forge::Dataset sample(dataset->begin(),
                          dataset->begin() + static_cast<std::ptrdiff_t>(
                                                 std::min(args.responses, dataset->size())));
    auto backend = llm::make_backend(rc->backend);
    if (!backend) {
      std::cerr << "backend error: " << backend.error() << "\n";
      return 2;
    }
    std::vector<llm::BackendPtr> panel(rc->panel_size, *backend);
    auto responses = eval::evaluate_responses(sample, **backend, panel);
    if (!responses) {
      std::cerr << responses.error() << "\n";
      return 1;
    }
    reports.responses = std::move(*responses);
  }

  for (auto format : {eval::ReportFormat::kJson, eval::ReportFormat::kMarkdown}) {
    auto path = eval::emit_report(reports, format, args.out);
    if (!path) {
      std::cerr << path.error() << "\n";
      return 1;
    }
    std::cout << "wrote " << path->string() << "\n";
  }
  return 0;
}

int repl(const Common& common, const ReplArgs&) {
  auto rc = load_runtime(common);
  if (!rc) return 2;
  auto backends = make_backends(*rc);
  if (!backends) return 2;

  auto broker = std::make_shared<platform::InProcessBroker>();
  platform::BedService bed(broker, rc->bed);
  platform::AgentService agent(broker, backends->agent, backends->expert, rc->agent);
  bed.start();
  agent.start();

  const std::string session = "repl";
  platform::SeqCounter seq;
  std::mutex out_mu;
  const auto sub = broker->subscribe(platform::topic_for(session, platform::topics::kDecision),
                                     [&](const platform::WireEnvelope& e) {
                                       std::lock_guard lock(out_mu);
                                       std::cout << "nurse> " << describe(e.payload) << std::endl;
                                     });

  std::cout << "Type a request. :interrupt stops the bed, :state shows it, "
               ":feedback s1 .. s8 scores the last reply, :quit leaves.\n";
  std::string line;
  while (true) {
    {
      std::lock_guard lock(out_mu);
      std::cout << "patient> " << std::flush;
    }
    if (!std::getline(std::cin, line)) break;
    if (line.empty()) continue;
    if (line == ":quit") break;
    if (line == ":state") {
      std::lock_guard lock(out_mu);
      std::cout << bed::to_json(bed.telemetry()).dump() << std::endl;
      continue;
    }
    if (line == ":interrupt") {
      (void)broker->publish(platform::make_envelope(seq, session, platform::topics::kInterrupt,
                                                    {{"reason", "repl"}}));
      continue;
    }
    if (line.rfind(":feedback", 0) == 0) {
      std::istringstream in(line.substr(9));
      expert::MetricVector v;
      std::size_t n = 0;
      while (n < expert::kMetricCount && in >> v.s[n]) ++n;
      if (n != expert::kMetricCount || !v.valid()) {
        std::cout << "feedback needs eight scores between 1 and 5\n";
        continue;
      }
      (void)broker->publish(platform::make_envelope(seq, session, platform::topics::kFeedback,
                                                    {{"scores", expert::scores_to_json(v)}}));
      agent.drain();
      std::cout << "weights " << expert::weights_to_json(agent.equalizer(session).weights).dump()
                << "\n";
      continue;
    }
    (void)broker->publish(
        platform::make_envelope(seq, session, platform::topics::kRequest, {{"text", line}}));
    agent.drain();
    broker->drain();
  }
  broker->unsubscribe(sub);
  agent.stop();
  bed.stop();
  return 0;
}

}  // namespace aoecr::cli
