#include "aoecr/llm/scripted.h"

#include <fstream>

#include <nlohmann/json.hpp>

namespace aoecr::llm {

ScriptedBackend::ScriptedBackend(std::map<std::string, std::string> transcript)
    : transcript_(std::move(transcript)) {}

Expected<std::shared_ptr<ScriptedBackend>, std::string> ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return unexpected("cannot open transcript " + path.string());
  std::map<std::string, std::string> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      table[j.at("digest").get<std::string>()] = j.at("emission").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      return unexpected(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return std::make_shared<ScriptedBackend>(std::move(table));
}

void ScriptedBackend::pin(std::span<const ChatMessage> messages, std::string emission) {
  pin_digest(digest(messages), std::move(emission));
}

void ScriptedBackend::pin_digest(std::string d, std::string emission) {
  std::lock_guard lock(mu_);
  transcript_[std::move(d)] = std::move(emission);
}

std::size_t ScriptedBackend::size() const {
  std::lock_guard lock(mu_);
  return transcript_.size();
}

Completion ScriptedBackend::complete(std::span<const ChatMessage> messages) {
  if (auto err = check_messages(messages)) return unexpected(*err);
  const auto d = digest(messages);
  std::lock_guard lock(mu_);
  auto it = transcript_.find(d);
  if (it == transcript_.end()) {
    return unexpected(BackendError{BackendError::Kind::kNoTranscriptEntry, d});
  }
  return it->second;
}

}  // namespace aoecr::llm
