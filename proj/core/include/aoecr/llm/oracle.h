#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "aoecr/command/command.h"
#include "aoecr/forge/clarity.h"
#include "aoecr/llm/backend.h"

namespace aoecr::llm {

struct TruthEntry {
  std::string label;
  Clarity clarity = Clarity::kHigh;
};

/// Ground truth for requests the oracle may be asked about, keyed by request id.
class OracleTruth {
 public:
  void add(std::string request_id, TruthEntry entry);
  const TruthEntry* find(const std::string& request_id) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, TruthEntry, std::less<>> entries_;
};

/// Fault model of the oracle backend.
struct OracleConfig {
  std::uint64_t seed = 0;
  PerClarity<double> corruption{0.0, 0.0, 0.0, 0.0};           // first generation
  PerClarity<double> revision_corruption{0.0, 0.0, 0.0, 0.0};  // revision rounds
  double detection = 1.0;    // probability a wrong plan is flagged on check
  double judge_noise = 0.0;  // probability of a +-1 change per judged metric
  std::shared_ptr<const OracleTruth> truth;

  bool valid() const;
};

/// Offline stand-in for every model role in the system. It reads the task
/// header of the last user message and answers from ground truth (registered
/// request ids) or from a keyword reading of the request text, applying the
/// configured fault model. Each call draws from a stream keyed by
/// (seed, request id, task, round), so results do not depend on call order.
class OracleBackend final : public ChatBackend {
 public:
  explicit OracleBackend(OracleConfig config);

  Completion complete(std::span<const ChatMessage> messages) override;
  std::string_view name() const override { return "oracle"; }

  const OracleConfig& config() const { return config_; }
  std::uint64_t calls() const { return calls_.load(); }

 private:
  OracleConfig config_;
  std::atomic<std::uint64_t> calls_{0};
};

/// Keyword reading of a free-text request, used when no truth is registered.
std::optional<command::CommandPlan> infer_plan(std::string_view request);

/// The oracle's fault injection: one uniformly chosen step gets a uniformly
/// chosen different action.
command::CommandPlan corrupt_plan(const command::CommandPlan& plan, std::mt19937_64& rng);

}  // namespace aoecr::llm
