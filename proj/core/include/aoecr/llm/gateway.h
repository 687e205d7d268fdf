#pragma once

#include <atomic>
#include <string>

#include "aoecr/llm/backend.h"
#include "aoecr/llm/oracle.h"
#include "aoecr/llm/remote.h"
#include "aoecr/llm/scripted.h"

namespace aoecr::llm {

struct BackendConfig {
  enum class Kind { kRemote, kScripted, kOracle };
  Kind kind = Kind::kOracle;
  RemoteConfig remote;
  std::string transcript_path;  // scripted
  OracleConfig oracle;
};

Expected<BackendPtr, std::string> make_backend(const BackendConfig& config);

/// Decorator counting complete() calls.
class CountingBackend final : public ChatBackend {
 public:
  explicit CountingBackend(BackendPtr inner) : inner_(std::move(inner)) {}

  Completion complete(std::span<const ChatMessage> messages) override {
    ++calls_;
    return inner_->complete(messages);
  }
  std::string_view name() const override { return inner_->name(); }
  std::uint64_t calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 private:
  BackendPtr inner_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace aoecr::llm
