#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aoecr/expert/equalizer.h"
#include "aoecr/llm/backend.h"
#include "aoecr/util/expected.h"

namespace aoecr::expert {

/// Expert prompt: metrics ranked by weight (ties in metric order), each tagged
/// with its emphasis band.
llm::Messages expert_messages(std::string_view tentative, std::string_view request,
                              const EqualizerWeights& weights);

/// Rewrites the tentative response under the equalizer. Any backend failure
/// or unusable emission returns `tentative` unchanged.
std::string optimize_response(std::string_view tentative, std::string_view request,
                              const EqualizerWeights& weights, llm::ChatBackend& backend);

llm::Messages judge_messages(std::string_view response, std::string_view request,
                             std::size_t judge_index);

/// Parses one expert ballot: a JSON object with all eight metrics in [1, 5].
std::optional<MetricVector> parse_ballot(std::string_view emission);

struct PanelScore {
  std::vector<std::optional<MetricVector>> per_expert;  // nullopt: ballot dropped
  MetricVector mean;                                    // over valid ballots
  double overall = 0.0;                                 // mean over metrics of `mean`
  std::size_t valid_ballots = 0;
};

struct AllBallotsInvalid {
  std::size_t panel_size = 0;
};

/// Scores a response with every expert concurrently. Invalid ballots are
/// dropped whole.
Expected<PanelScore, AllBallotsInvalid> score_response(std::string_view response,
                                                       std::string_view request,
                                                       std::span<const llm::BackendPtr> panel);

}  // namespace aoecr::expert
