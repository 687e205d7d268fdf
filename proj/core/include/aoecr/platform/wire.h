#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "aoecr/util/expected.h"

namespace aoecr::platform {

namespace topics {
inline constexpr std::string_view kPrefix = "aoecr/v1/";
inline constexpr std::string_view kRequest = "request";
inline constexpr std::string_view kDecision = "decision";
inline constexpr std::string_view kCommand = "command";
inline constexpr std::string_view kTelemetry = "telemetry";
inline constexpr std::string_view kInterrupt = "interrupt";
inline constexpr std::string_view kFeedback = "feedback";
}  // namespace topics

struct TopicSpec {
  std::string_view kind;
  std::string_view producer;
  std::string_view consumer;
  std::string_view payload;
};

/// The fixed topic table, one row per topic kind.
const std::vector<TopicSpec>& topic_contract();

/// "aoecr/v1/{session}/{kind}"
std::string topic_for(std::string_view session_id, std::string_view kind);

struct TopicParts {
  std::string session_id;
  std::string kind;
};
std::optional<TopicParts> split_topic(std::string_view topic);

/// MQTT filter matching: '+' matches one level, a trailing '#' the rest.
bool topic_matches(std::string_view filter, std::string_view topic);

/// Session ids are 1-64 characters of [A-Za-z0-9_-].
bool valid_session_id(std::string_view id);

struct WireEnvelope {
  std::string topic;
  std::string session_id;
  std::uint64_t seq = 0;
  std::int64_t ts = 0;  // ms since epoch
  nlohmann::json payload;
};

std::int64_t now_ms();

nlohmann::json envelope_to_json(const WireEnvelope& e);
Expected<WireEnvelope, std::string> envelope_from_json(const nlohmann::json& j);
std::string encode(const WireEnvelope& e);
Expected<WireEnvelope, std::string> decode(std::string_view text);

/// Per (session, topic) sequence numbers starting at 1.
class SeqCounter {
 public:
  std::uint64_t next(const std::string& session_id, const std::string& topic);

 private:
  std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> next_;
};

/// Drops envelopes whose (session, topic, seq) was already accepted.
class Deduplicator {
 public:
  bool accept(const WireEnvelope& e);

 private:
  std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> high_water_;
};

/// Builds an envelope for a session topic with the next sequence number.
WireEnvelope make_envelope(SeqCounter& seq, std::string_view session_id, std::string_view kind,
                           nlohmann::json payload);

}  // namespace aoecr::platform
