#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aoecr/cos/pipeline.h"
#include "aoecr/expert/equalizer.h"
#include "aoecr/forge/clarity.h"
#include "aoecr/forge/dataset.h"
#include "aoecr/llm/backend.h"
#include "aoecr/llm/oracle.h"
#include "aoecr/util/expected.h"

namespace aoecr::eval {

// Each stage is the previous one plus one mechanism.
enum class AblationStage { kPromptOnly, kPromptFinetunedProxy, kFullWithCos };

inline constexpr std::array<AblationStage, 3> kAllStages{
    AblationStage::kPromptOnly, AblationStage::kPromptFinetunedProxy, AblationStage::kFullWithCos};

std::string_view to_string(AblationStage s);
std::optional<AblationStage> stage_from_string(std::string_view s);

struct StageFaults {
  PerClarity<double> generation{0.0, 0.0, 0.0, 0.0};
  PerClarity<double> revision{0.0, 0.0, 0.0, 0.0};
};

/// Oracle fault rates per stage. The proxy stage stands in for fine-tuning by
/// lowering the generation corruption of the prompt-only stage.
struct FaultProfile {
  double detection = 0.9;
  int max_revisions = 2;
  std::array<StageFaults, 3> stages{};

  const StageFaults& at(AblationStage s) const { return stages[static_cast<std::size_t>(s)]; }
  StageFaults& at(AblationStage s) { return stages[static_cast<std::size_t>(s)]; }

  /// Every rate zero.
  static FaultProfile calibration();
  /// prompt_only {.25 .5 .65 .8}; proxy and full {.05 .3 .5 .7}; detection .9, R = 2.
  static FaultProfile reference();
};

nlohmann::json fault_profile_to_json(const FaultProfile& p);
Expected<FaultProfile, std::string> fault_profile_from_json(const nlohmann::json& j);
Expected<FaultProfile, std::string> load_fault_profile(const std::filesystem::path& path);

cos::PipelineOptions stage_options(AblationStage stage, const FaultProfile& profile);

struct EvalConfig {
  FaultProfile profile = FaultProfile::calibration();
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0: hardware concurrency
  /// Overrides the per-stage oracle (scripted or remote backends).
  llm::BackendPtr backend;
};

struct AccuracyCell {
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n); }
};

struct AccuracyReport {
  AblationStage stage = AblationStage::kPromptOnly;
  PerClarity<AccuracyCell> by_clarity{};
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t clarified = 0;
  std::size_t refused = 0;
  std::size_t backend_failures = 0;
  double total = 0.0;

  const AccuracyCell& at(Clarity c) const { return by_clarity[index(c)]; }
};

/// Count-weighted mean of the per-clarity accuracies.
double recomputed_total(const AccuracyReport& r);

struct ItemOutcome {
  std::string id;
  Clarity clarity = Clarity::kHigh;
  std::string decision;  // execute | clarify | refuse
  bool correct = false;
};

/// Exact match of canonical serializations; a clarification is correct only
/// on an unclear pair.
bool judge_item(const forge::DialoguePair& pair, const cos::AgentDecision& decision);

AccuracyReport evaluate_commands(const forge::Dataset& dataset, AblationStage stage,
                                 const EvalConfig& config,
                                 std::vector<ItemOutcome>* outcomes = nullptr);

/// All three stages over the same dataset and seed, in stage order.
std::vector<AccuracyReport> run_ablation(const forge::Dataset& dataset, const EvalConfig& config);

struct MetricComparison {
  double baseline_mean = 0.0;
  double candidate_mean = 0.0;
  double improved_pct = 0.0;
  double unchanged_pct = 0.0;
  double regressed_pct = 0.0;
  std::vector<double> baseline_scores;
  std::vector<double> candidate_scores;
};

struct ResponseReport {
  std::string baseline;
  std::string candidate;
  std::size_t items = 0;
  std::array<MetricComparison, expert::kMetricCount> metrics{};

  const MetricComparison& at(expert::Metric m) const { return metrics[static_cast<std::size_t>(m)]; }
};

struct ResponseEvaluation {
  std::vector<ResponseReport> reports;  // tentative/default, default/conciseness, default/safety_encouragement
  std::vector<std::string> excluded;    // items where a panel returned no valid ballot
};

ResponseReport compare_scores(std::string baseline, std::string candidate,
                              const std::vector<expert::MetricVector>& base,
                              const std::vector<expert::MetricVector>& cand);

/// Tentative response is the pair's nurse response; each preset rewrites it
/// through the expert backend and the panel scores every variant.
Expected<ResponseEvaluation, std::string> evaluate_responses(
    const forge::Dataset& sample, llm::ChatBackend& expert,
    const std::vector<llm::BackendPtr>& panel, std::size_t workers = 0);

}  // namespace aoecr::eval
