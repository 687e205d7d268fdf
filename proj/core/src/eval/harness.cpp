#include "aoecr/eval/harness.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "aoecr/command/command.h"
#include "aoecr/expert/optimizer.h"

namespace aoecr::eval {

std::string_view to_string(AblationStage s) {
  switch (s) {
    case AblationStage::kPromptOnly:
      return "prompt_only";
    case AblationStage::kPromptFinetunedProxy:
      return "prompt_finetuned_proxy";
    case AblationStage::kFullWithCos:
      return "full_with_cos";
  }
  return "prompt_only";
}

std::optional<AblationStage> stage_from_string(std::string_view s) {
  for (auto stage : kAllStages) {
    if (to_string(stage) == s) return stage;
  }
  return std::nullopt;
}

FaultProfile FaultProfile::calibration() { return FaultProfile{}; }

FaultProfile FaultProfile::reference() {
  FaultProfile p;
  p.detection = 0.9;
  p.max_revisions = 2;
  p.at(AblationStage::kPromptOnly).generation = {0.25, 0.5, 0.65, 0.8};
  p.at(AblationStage::kPromptFinetunedProxy).generation = {0.05, 0.3, 0.5, 0.7};
  p.at(AblationStage::kFullWithCos).generation = {0.05, 0.3, 0.5, 0.7};
  return p;
}

namespace {

nlohmann::json per_clarity_json(const PerClarity<double>& v) {
  nlohmann::json j = nlohmann::json::object();
  for (auto c : kAllClarities) j[std::string(to_string(c))] = v[index(c)];
  return j;
}

std::optional<std::string> read_per_clarity(const nlohmann::json& j, PerClarity<double>& out) {
  if (!j.is_object()) return "expected an object keyed by clarity";
  for (const auto& [key, value] : j.items()) {
    auto c = clarity_from_string(key);
    if (!c) return "unknown clarity '" + key + "'";
    if (!value.is_number()) return "rate for '" + key + "' is not a number";
    const double r = value.get<double>();
    if (r < 0.0 || r > 1.0) return "rate for '" + key + "' outside [0, 1]";
    out[index(*c)] = r;
  }
  return std::nullopt;
}

std::size_t worker_count(std::size_t requested, std::size_t items) {
  std::size_t n = requested != 0 ? requested
                                 : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, items));
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn fn) {
  if (count == 0) return;
  workers = worker_count(workers, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    }));
  }
  for (auto& j : jobs) j.get();
}

}  // namespace

nlohmann::json fault_profile_to_json(const FaultProfile& p) {
  nlohmann::json j;
  j["detection"] = p.detection;
  j["max_revisions"] = p.max_revisions;
  for (auto s : kAllStages) {
    j["stages"][std::string(to_string(s))] = {{"generation", per_clarity_json(p.at(s).generation)},
                                              {"revision", per_clarity_json(p.at(s).revision)}};
  }
  return j;
}

Expected<FaultProfile, std::string> fault_profile_from_json(const nlohmann::json& j) {
  if (!j.is_object()) return unexpected(std::string("fault profile must be an object"));
  FaultProfile p;
  if (j.contains("detection")) {
    if (!j["detection"].is_number()) return unexpected(std::string("detection: not a number"));
    p.detection = j["detection"].get<double>();
    if (p.detection < 0.0 || p.detection > 1.0) {
      return unexpected(std::string("detection: outside [0, 1]"));
    }
  }
  if (j.contains("max_revisions")) {
    if (!j["max_revisions"].is_number_integer() || j["max_revisions"].get<int>() < 0) {
      return unexpected(std::string("max_revisions: expected a non-negative integer"));
    }
    p.max_revisions = j["max_revisions"].get<int>();
  }
  if (j.contains("stages")) {
    const auto& stages = j["stages"];
    if (!stages.is_object()) return unexpected(std::string("stages: expected an object"));
    for (const auto& [name, body] : stages.items()) {
      auto stage = stage_from_string(name);
      if (!stage) return unexpected("stages: unknown stage '" + name + "'");
      if (!body.is_object()) return unexpected("stages." + name + ": expected an object");
      for (const auto& [key, rates] : body.items()) {
        PerClarity<double>* target = nullptr;
        if (key == "generation") target = &p.at(*stage).generation;
        if (key == "revision") target = &p.at(*stage).revision;
        if (!target) return unexpected("stages." + name + ": unknown field '" + key + "'");
        if (auto err = read_per_clarity(rates, *target)) {
          return unexpected("stages." + name + "." + key + ": " + *err);
        }
      }
    }
  }
  return p;
}

Expected<FaultProfile, std::string> load_fault_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return unexpected("cannot open " + path.string());
  try {
    auto r = fault_profile_from_json(nlohmann::json::parse(in));
    if (!r) return unexpected(path.string() + ": " + r.error());
    return r;
  } catch (const nlohmann::json::exception& e) {
    return unexpected(path.string() + ": " + e.what());
  }
}

cos::PipelineOptions stage_options(AblationStage stage, const FaultProfile& profile) {
  cos::PipelineOptions o;
  const bool full = stage == AblationStage::kFullWithCos;
  o.classify = full;
  o.self_check = full;
  o.predict_time = full;
  o.max_revisions = profile.max_revisions;
  return o;
}

double recomputed_total(const AccuracyReport& r) {
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& cell : r.by_clarity) {
    weighted += cell.accuracy() * static_cast<double>(cell.n);
    n += cell.n;
  }
  return n == 0 ? 0.0 : weighted / static_cast<double>(n);
}

bool judge_item(const forge::DialoguePair& pair, const cos::AgentDecision& decision) {
  if (const auto* exec = std::get_if<cos::Execute>(&decision)) {
    return command::serialize(exec->plan) == pair.canonical_command;
  }
  if (std::holds_alternative<cos::Clarify>(decision)) return pair.clarity == Clarity::kUnclear;
  return false;
}

namespace {

llm::BackendPtr stage_backend(const forge::Dataset& dataset, AblationStage stage,
                              const EvalConfig& config) {
  if (config.backend) return config.backend;
  auto truth = std::make_shared<llm::OracleTruth>();
  for (const auto& p : dataset) truth->add(p.id, {p.action_label, p.clarity});
  llm::OracleConfig oc;
  oc.seed = config.seed;
  oc.corruption = config.profile.at(stage).generation;
  oc.revision_corruption = config.profile.at(stage).revision;
  oc.detection = config.profile.detection;
  oc.truth = std::move(truth);
  return std::make_shared<llm::OracleBackend>(std::move(oc));
}

}  // namespace

AccuracyReport evaluate_commands(const forge::Dataset& dataset, AblationStage stage,
                                 const EvalConfig& config, std::vector<ItemOutcome>* outcomes) {
  AccuracyReport report;
  report.stage = stage;
  if (dataset.empty()) return report;

  cos::CosPipeline pipeline(stage_backend(dataset, stage, config),
                            stage_options(stage, config.profile));
  std::vector<ItemOutcome> items(dataset.size());
  std::vector<char> failed(dataset.size(), 0);

  parallel_for(dataset.size(), config.workers, [&](std::size_t i) {
    const auto& pair = dataset[i];
    cos::SessionContext ctx;
    ctx.session_id = "eval";
    ctx.turn_id = pair.id;
    auto result = pipeline.handle_request(ctx, pair.patient_request);
    items[i].id = pair.id;
    items[i].clarity = pair.clarity;
    items[i].decision = std::string(cos::decision_kind(result.decision));
    items[i].correct = judge_item(pair, result.decision);
    if (const auto* r = std::get_if<cos::Refuse>(&result.decision)) {
      if (r->reason.starts_with("backend unavailable")) {
        failed[i] = 1;
        spdlog::warn("{}: {}", pair.id, r->reason);
      }
    }
  });

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return items[a].id < items[b].id; });

  for (auto i : order) {
    const auto& item = items[i];
    auto& cell = report.by_clarity[index(item.clarity)];
    ++cell.n;
    ++report.n;
    if (item.correct) {
      ++cell.correct;
      ++report.correct;
    }
    if (item.decision == "clarify") ++report.clarified;
    if (item.decision == "refuse") ++report.refused;
    report.backend_failures += static_cast<std::size_t>(failed[i]);
  }
  report.total = recomputed_total(report);

  if (outcomes) {
    outcomes->clear();
    for (auto i : order) outcomes->push_back(items[i]);
  }
  return report;
}

std::vector<AccuracyReport> run_ablation(const forge::Dataset& dataset, const EvalConfig& config) {
  std::vector<AccuracyReport> out;
  for (auto stage : kAllStages) out.push_back(evaluate_commands(dataset, stage, config));
  return out;
}

ResponseReport compare_scores(std::string baseline, std::string candidate,
                              const std::vector<expert::MetricVector>& base,
                              const std::vector<expert::MetricVector>& cand) {
  ResponseReport r;
  r.baseline = std::move(baseline);
  r.candidate = std::move(candidate);
  r.items = std::min(base.size(), cand.size());
  constexpr double kTie = 1e-9;
  for (auto m : expert::kAllMetrics) {
    auto& mc = r.metrics[static_cast<std::size_t>(m)];
    std::size_t up = 0;
    std::size_t same = 0;
    std::size_t down = 0;
    for (std::size_t i = 0; i < r.items; ++i) {
      const double b = base[i][m];
      const double c = cand[i][m];
      mc.baseline_scores.push_back(b);
      mc.candidate_scores.push_back(c);
      mc.baseline_mean += b;
      mc.candidate_mean += c;
      if (c > b + kTie) {
        ++up;
      } else if (c < b - kTie) {
        ++down;
      } else {
        ++same;
      }
    }
    if (r.items == 0) continue;
    const double n = static_cast<double>(r.items);
    mc.baseline_mean /= n;
    mc.candidate_mean /= n;
    mc.improved_pct = 100.0 * static_cast<double>(up) / n;
    mc.regressed_pct = 100.0 * static_cast<double>(down) / n;
    mc.unchanged_pct = 100.0 - mc.improved_pct - mc.regressed_pct;
  }
  return r;
}

Expected<ResponseEvaluation, std::string> evaluate_responses(
    const forge::Dataset& sample, llm::ChatBackend& expert,
    const std::vector<llm::BackendPtr>& panel, std::size_t workers) {
  if (panel.empty()) return unexpected(std::string("expert panel is empty"));

  // Variant 0 is the tentative response; the rest follow the preset order.
  const auto& presets = expert::equalizer_presets();
  const std::size_t variants = 1 + presets.size();
  struct ItemScores {
    std::vector<std::optional<expert::MetricVector>> v;
  };
  std::vector<ItemScores> scores(sample.size());

  parallel_for(sample.size(), workers, [&](std::size_t i) {
    const auto& pair = sample[i];
    scores[i].v.resize(variants);
    std::vector<std::string> texts{pair.nurse_response};
    for (const auto& [name, weights] : presets) {
      texts.push_back(
          expert::optimize_response(pair.nurse_response, pair.patient_request, weights, expert));
    }
    for (std::size_t k = 0; k < variants; ++k) {
      auto s = expert::score_response(texts[k], pair.patient_request, panel);
      if (s) scores[i].v[k] = s->mean;
    }
  });

  ResponseEvaluation out;
  std::vector<std::vector<expert::MetricVector>> kept(variants);
  std::vector<std::size_t> order(sample.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sample[a].id < sample[b].id; });
  for (auto i : order) {
    const bool complete = std::all_of(scores[i].v.begin(), scores[i].v.end(),
                                      [](const auto& s) { return s.has_value(); });
    if (!complete) {
      spdlog::warn("{}: no valid ballot from the panel, item excluded", sample[i].id);
      out.excluded.push_back(sample[i].id);
      continue;
    }
    for (std::size_t k = 0; k < variants; ++k) kept[k].push_back(*scores[i].v[k]);
  }

  auto variant_of = [&](std::string_view name) -> std::size_t {
    for (std::size_t k = 0; k < presets.size(); ++k) {
      if (presets[k].first == name) return k + 1;
    }
    return 0;
  };
  const auto def = variant_of("default");
  out.reports.push_back(compare_scores("tentative", "default", kept[0], kept[def]));
  for (std::string_view name : {"conciseness", "safety_encouragement"}) {
    out.reports.push_back(compare_scores("default", std::string(name), kept[def], kept[variant_of(name)]));
  }
  return out;
}

}  // namespace aoecr::eval
