#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aoecr/forge/clarity.h"
#include "aoecr/llm/backend.h"
#include "aoecr/util/expected.h"

namespace aoecr::forge {

enum class Reason { kDirectAdjustment, kPhysicalDiscomfort, kPsychologicalSensation };

inline constexpr std::array<Reason, 3> kAllReasons{
    Reason::kDirectAdjustment, Reason::kPhysicalDiscomfort, Reason::kPsychologicalSensation};

std::string_view to_string(Reason r);

struct ScenarioSeed {
  std::string id;  // base id; expanded pairs append a clarity suffix
  Reason reason = Reason::kDirectAdjustment;
  std::string label;
  std::uint64_t rng_seed = 0;
};

struct DialoguePair {
  std::string id;
  Clarity clarity = Clarity::kHigh;
  std::string patient_request;
  std::string nurse_response;
  std::string action_label;
  std::string canonical_command;  // serialized CommandPlan
  std::optional<std::string> parent_id;

  friend bool operator==(const DialoguePair&, const DialoguePair&) = default;
};

using Dataset = std::vector<DialoguePair>;

/// `count` seeds cycling uniformly over `labels` (default: the eight single
/// actions) and the three reasons.
std::vector<ScenarioSeed> make_seeds(std::size_t count, std::uint64_t master_seed,
                                     const std::vector<std::string>& labels = {});

struct ForgeError {
  enum class Kind { kBackend, kRejectedPair, kUnknownLabel };
  Kind kind = Kind::kBackend;
  std::string detail;

  std::string message() const;
};

llm::Messages patient_messages(const ScenarioSeed& seed);
llm::Messages nurse_messages(const ScenarioSeed& seed, std::string_view patient_request);

/// Rejects patient text that leaks command syntax (JSON, fences, action ids).
bool passes_sanity_gate(std::string_view patient_request);

/// One high-clarity pair from the two role-prompted backends.
Expected<DialoguePair, ForgeError> simulate_pair(const ScenarioSeed& seed,
                                                 llm::ChatBackend& patient,
                                                 llm::ChatBackend& nurse);

enum class DegradeOp { kDeletion, kShuffle, kStutter, kFiller };

std::string_view to_string(DegradeOp op);

struct DegradeTrace {
  std::string text;
  std::vector<DegradeOp> ops;  // in application order
  bool target_nouns_removed = false;
};

/// Rule-based obfuscation for a lower clarity level. medium applies one
/// operator, low two or three, unclear three or four plus removal of the
/// target nouns. Output is never empty.
DegradeTrace degrade_clarity_traced(std::string_view request, Clarity level,
                                    std::mt19937_64& rng);
std::string degrade_clarity(std::string_view request, Clarity level, std::mt19937_64& rng);

/// Fraction of the original's words (multiset, stutter-normalized) present in
/// the degraded text.
double token_retention(std::string_view original, std::string_view degraded);

/// Each high-clarity pair followed by its medium, low and unclear variants.
Dataset expand_dataset(const Dataset& high, std::uint64_t seed);

struct ForgeResult {
  Dataset dataset;
  std::vector<std::string> rejected;  // seed id: reason
};

/// simulate_pair over all seeds (concurrently), then expand_dataset.
ForgeResult forge(const std::vector<ScenarioSeed>& seeds, llm::ChatBackend& patient,
                  llm::ChatBackend& nurse, std::uint64_t expand_seed);

struct DatasetStats {
  std::map<std::string, std::size_t> by_label;
  std::map<std::string, std::size_t> by_clarity;
  std::map<std::string, std::map<std::string, std::size_t>> by_label_clarity;
  std::size_t total = 0;
};

/// Exact counts; every vocabulary label and clarity level is present, zero or not.
DatasetStats dataset_stats(const Dataset& dataset);
nlohmann::json stats_to_json(const DatasetStats& stats);
std::string stats_to_markdown(const DatasetStats& stats);

nlohmann::json pair_to_json(const DialoguePair& pair);
Expected<DialoguePair, std::string> pair_from_json(const nlohmann::json& j);

Expected<Dataset, std::string> read_dataset(const std::filesystem::path& path);
Expected<bool, std::string> write_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Instruction-tuning record for one pair.
nlohmann::json finetune_record(const DialoguePair& pair);
Expected<bool, std::string> export_finetune(const Dataset& dataset,
                                            const std::filesystem::path& path);

/// Every non-high pair has a high-clarity parent sharing its label, command
/// and response. Returns the ids of pairs that violate this.
std::vector<std::string> provenance_violations(const Dataset& dataset);

}  // namespace aoecr::forge
