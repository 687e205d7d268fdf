#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "aoecr/llm/backend.h"

namespace aoecr::llm {

/// Replays pinned emissions keyed by the digest of the exact rendered prompt.
/// A miss is a BackendError (no-transcript-entry) naming the digest.
class ScriptedBackend final : public ChatBackend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::map<std::string, std::string> transcript);

  /// Loads JSONL lines {"digest": ..., "emission": ...}.
  static Expected<std::shared_ptr<ScriptedBackend>, std::string> load(const std::filesystem::path& path);

  void pin(std::span<const ChatMessage> messages, std::string emission);
  void pin_digest(std::string digest, std::string emission);
  std::size_t size() const;

  Completion complete(std::span<const ChatMessage> messages) override;
  std::string_view name() const override { return "scripted"; }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> transcript_;
};

}  // namespace aoecr::llm
