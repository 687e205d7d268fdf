#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aoecr/expert/equalizer.h"
#include "aoecr/util/expected.h"

namespace aoecr::platform {

namespace events {
inline constexpr const char* kRequest = "request";
inline constexpr const char* kDecision = "decision";
inline constexpr const char* kCommand = "command";
inline constexpr const char* kFeedback = "feedback";
inline constexpr const char* kTelemetry = "telemetry";
inline constexpr const char* kInterrupt = "interrupt";
}  // namespace events

struct EqualizerState {
  expert::EqualizerWeights weights = expert::EqualizerWeights::uniform();
  std::uint64_t update_count = 0;
};

/// Append-only JSONL event logs, one file per session, plus the latest
/// equalizer snapshot per session.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  /// Adds "index" (0-based position in the log) and "ts" when missing.
  Expected<bool, std::string> append(const std::string& session_id, nlohmann::json event);
  std::vector<nlohmann::json> read(const std::string& session_id) const;
  bool exists(const std::string& session_id) const;
  /// Creates an empty log if none exists.
  Expected<bool, std::string> create(const std::string& session_id);
  std::vector<std::string> sessions() const;

  Expected<bool, std::string> save_equalizer(const std::string& session_id,
                                             const EqualizerState& state);
  std::optional<EqualizerState> load_equalizer(const std::string& session_id) const;

 private:
  std::filesystem::path log_path(const std::string& session_id) const;
  std::filesystem::path equalizer_path(const std::string& session_id) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::uint64_t> counts_;
};

/// Rebuilds the equalizer from the feedback events of a log, in order.
EqualizerState replay_equalizer(const std::vector<nlohmann::json>& log,
                                double rate = expert::kDefaultFeedbackRate);

}  // namespace aoecr::platform
