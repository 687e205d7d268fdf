#include "aoecr/expert/optimizer.h"

#include <algorithm>
#include <future>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "aoecr/llm/sections.h"
#include "aoecr/llm/task.h"
#include "aoecr/util/text.h"

namespace aoecr::expert {

namespace {

constexpr std::string_view kExpertSystem =
    "You are a senior geriatric nursing expert. You rewrite a care robot's reply to an "
    "elderly patient so that it reads the way an excellent nurse would speak. Keep the "
    "meaning and the action described in the reply; never promise a different action.";

constexpr std::string_view kJudgeSystem =
    "You are an expert evaluator of nursing communication. Score a care robot's reply to an "
    "elderly patient on eight metrics, each an integer from 1 (poor) to 5 (excellent).";

std::string metric_list() {
  std::vector<std::string> names;
  for (auto m : kAllMetrics) names.emplace_back(to_string(m));
  return text::join(names, ", ");
}

}  // namespace

llm::Messages expert_messages(std::string_view tentative, std::string_view request,
                              const EqualizerWeights& weights) {
  std::array<Metric, kMetricCount> order = kAllMetrics;
  std::stable_sort(order.begin(), order.end(),
                   [&](Metric a, Metric b) { return weights[a] > weights[b]; });

  std::vector<std::string> bands;
  std::string ranked;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto m = order[i];
    const auto band = to_string(band_for(weights[m]));
    bands.push_back(std::string(to_string(m)) + "=" + std::string(band));
    char weight[32];
    std::snprintf(weight, sizeof(weight), "%.3f", weights[m]);
    ranked += std::to_string(i + 1) + ". " + std::string(to_string(m)) + " [" +
              std::string(band) + "] weight " + weight + "\n";
  }

  llm::TaskBlock block;
  block.task = llm::tasks::kOptimize;
  block.fields[llm::fields::kRequest] = std::string(request);
  block.fields[llm::fields::kTentative] = std::string(tentative);
  block.fields[llm::fields::kEqualizer] = text::join(bands, ",");
  block.instructions =
      "Rewrite the tentative reply. Give each metric attention in proportion to its band: "
      "dominant metrics come first, raised metrics get extra care, neutral metrics are "
      "balanced, de-emphasized metrics may be traded away.\n" +
      ranked + "Answer with a single ```response fence.";
  return {{llm::Role::kSystem, std::string(kExpertSystem)},
          {llm::Role::kUser, llm::render_task(block)}};
}

std::string optimize_response(std::string_view tentative, std::string_view request,
                              const EqualizerWeights& weights, llm::ChatBackend& backend) {
  const auto messages = expert_messages(tentative, request, weights);
  auto emission = backend.complete(messages);
  if (!emission) {
    spdlog::warn("expert optimization skipped: {}", emission.error().message());
    return std::string(tentative);
  }
  auto sections = llm::extract_sections(*emission, {llm::SectionTag::kResponse});
  if (!sections) return std::string(tentative);
  auto optimized = sections->at(llm::SectionTag::kResponse);
  if (optimized.empty()) return std::string(tentative);
  return optimized;
}

llm::Messages judge_messages(std::string_view response, std::string_view request,
                             std::size_t judge_index) {
  llm::TaskBlock block;
  block.task = llm::tasks::kScore;
  block.fields[llm::fields::kJudge] = std::to_string(judge_index);
  block.fields[llm::fields::kRequest] = std::string(request);
  block.fields[llm::fields::kResponse] = std::string(response);
  block.instructions = "Return one JSON object with an integer score from 1 to 5 for each of: " +
                       metric_list() + ".";
  return {{llm::Role::kSystem, std::string(kJudgeSystem)},
          {llm::Role::kUser, llm::render_task(block)}};
}

std::optional<MetricVector> parse_ballot(std::string_view emission) {
  const auto open = emission.find('{');
  const auto close = emission.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  try {
    return scores_from_json(nlohmann::json::parse(emission.substr(open, close - open + 1)));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

Expected<PanelScore, AllBallotsInvalid> score_response(std::string_view response,
                                                       std::string_view request,
                                                       std::span<const llm::BackendPtr> panel) {
  std::vector<std::future<std::optional<MetricVector>>> pending;
  pending.reserve(panel.size());
  for (std::size_t i = 0; i < panel.size(); ++i) {
    pending.push_back(std::async(std::launch::async, [&, i] {
      auto emission = panel[i]->complete(judge_messages(response, request, i));
      if (!emission) {
        spdlog::warn("expert {} ballot failed: {}", i, emission.error().message());
        return std::optional<MetricVector>{};
      }
      auto ballot = parse_ballot(*emission);
      if (!ballot) spdlog::warn("expert {} ballot dropped: invalid scores", i);
      return ballot;
    }));
  }

  PanelScore out;
  MetricVector sum = MetricVector::constant(0.0);
  for (auto& f : pending) {
    auto ballot = f.get();
    if (ballot) {
      ++out.valid_ballots;
      for (std::size_t m = 0; m < kMetricCount; ++m) sum.s[m] += ballot->s[m];
    }
    out.per_expert.push_back(std::move(ballot));
  }
  if (out.valid_ballots == 0) return unexpected(AllBallotsInvalid{panel.size()});
  for (std::size_t m = 0; m < kMetricCount; ++m) {
    out.mean.s[m] = sum.s[m] / static_cast<double>(out.valid_ballots);
  }
  out.overall = std::accumulate(out.mean.s.begin(), out.mean.s.end(), 0.0) / kMetricCount;
  return out;
}

}  // namespace aoecr::expert
