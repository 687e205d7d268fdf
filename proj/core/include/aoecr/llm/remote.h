#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "aoecr/llm/backend.h"

namespace aoecr::llm {

struct RemoteConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8000/v1/chat/completions
  std::string model;
  std::chrono::milliseconds timeout{30000};  // total budget per complete() call
  int max_retries = 2;                       // transport errors only
  std::chrono::milliseconds backoff{200};    // doubled per retry
  std::string token_env = "AOECR_LLM_TOKEN";
  nlohmann::json sampling = nlohmann::json::object();  // passed through verbatim
};

/// OpenAI-compatible chat-completion client.
class RemoteBackend final : public ChatBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  Completion complete(std::span<const ChatMessage> messages) override;
  std::string_view name() const override { return "remote"; }

 private:
  RemoteConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace aoecr::llm
