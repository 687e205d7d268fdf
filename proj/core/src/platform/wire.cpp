#include "aoecr/platform/wire.h"

#include <chrono>

namespace aoecr::platform {

const std::vector<TopicSpec>& topic_contract() {
  static const std::vector<TopicSpec> table{
      {topics::kRequest, "patient", "agent", R"({"request_id": str, "text": str})"},
      {topics::kDecision, "agent", "platform",
       R"({"request_id": str, "kind": "execute"|"clarify"|"refuse", "response"?, "plan"?, "question"?, "reason"?})"},
      {topics::kCommand, "platform", "bed", R"({"request_id": str, "plan": CommandPlan})"},
      {topics::kTelemetry, "bed", "all", R"({"ts": num, "mechanisms": {...}, "active": {...}|null})"},
      {topics::kInterrupt, "any", "bed", R"({"reason": str})"},
      {topics::kFeedback, "patient", "agent", R"({"scores": {metric: 1..5}})"},
  };
  return table;
}

std::string topic_for(std::string_view session_id, std::string_view kind) {
  std::string t(topics::kPrefix);
  t += session_id;
  t += '/';
  t += kind;
  return t;
}

std::optional<TopicParts> split_topic(std::string_view topic) {
  if (!topic.starts_with(topics::kPrefix)) return std::nullopt;
  topic.remove_prefix(topics::kPrefix.size());
  const auto slash = topic.find('/');
  if (slash == std::string_view::npos || slash == 0) return std::nullopt;
  TopicParts parts{std::string(topic.substr(0, slash)), std::string(topic.substr(slash + 1))};
  if (parts.kind.empty() || parts.kind.find('/') != std::string::npos) return std::nullopt;
  return parts;
}

bool topic_matches(std::string_view filter, std::string_view topic) {
  while (true) {
    const auto fs = filter.find('/');
    const auto ts = topic.find('/');
    const auto flevel = filter.substr(0, fs);
    const auto tlevel = topic.substr(0, ts);
    if (flevel == "#") return true;
    if (flevel != "+" && flevel != tlevel) return false;
    if (fs == std::string_view::npos || ts == std::string_view::npos) {
      return fs == std::string_view::npos && ts == std::string_view::npos;
    }
    filter.remove_prefix(fs + 1);
    topic.remove_prefix(ts + 1);
  }
}

bool valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

nlohmann::json envelope_to_json(const WireEnvelope& e) {
  nlohmann::ordered_json j;
  j["topic"] = e.topic;
  j["session_id"] = e.session_id;
  j["seq"] = e.seq;
  j["ts"] = e.ts;
  j["payload"] = e.payload;
  return nlohmann::json(j);
}

Expected<WireEnvelope, std::string> envelope_from_json(const nlohmann::json& j) {
  if (!j.is_object()) return unexpected(std::string("envelope must be an object"));
  for (const char* key : {"topic", "session_id", "seq", "ts", "payload"}) {
    if (!j.contains(key)) return unexpected(std::string("envelope missing '") + key + "'");
  }
  if (!j["topic"].is_string() || !j["session_id"].is_string()) {
    return unexpected(std::string("topic and session_id must be strings"));
  }
  if (!j["seq"].is_number_unsigned() && !j["seq"].is_number_integer()) {
    return unexpected(std::string("seq must be an integer"));
  }
  if (!j["ts"].is_number_integer()) return unexpected(std::string("ts must be an integer"));
  WireEnvelope e;
  e.topic = j["topic"].get<std::string>();
  e.session_id = j["session_id"].get<std::string>();
  e.seq = j["seq"].get<std::uint64_t>();
  e.ts = j["ts"].get<std::int64_t>();
  e.payload = j["payload"];
  return e;
}

std::string encode(const WireEnvelope& e) {
  nlohmann::ordered_json j;
  j["topic"] = e.topic;
  j["session_id"] = e.session_id;
  j["seq"] = e.seq;
  j["ts"] = e.ts;
  j["payload"] = e.payload;
  return j.dump();
}

Expected<WireEnvelope, std::string> decode(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) return unexpected(std::string("envelope is not valid JSON"));
  return envelope_from_json(j);
}

std::uint64_t SeqCounter::next(const std::string& session_id, const std::string& topic) {
  std::lock_guard lock(mu_);
  return ++next_[{session_id, topic}];
}

bool Deduplicator::accept(const WireEnvelope& e) {
  std::lock_guard lock(mu_);
  auto& hw = high_water_[{e.session_id, e.topic}];
  if (e.seq <= hw) return false;
  hw = e.seq;
  return true;
}

WireEnvelope make_envelope(SeqCounter& seq, std::string_view session_id, std::string_view kind,
                           nlohmann::json payload) {
  WireEnvelope e;
  e.topic = topic_for(session_id, kind);
  e.session_id = std::string(session_id);
  e.seq = seq.next(e.session_id, e.topic);
  e.ts = now_ms();
  e.payload = std::move(payload);
  return e;
}

}  // namespace aoecr::platform
