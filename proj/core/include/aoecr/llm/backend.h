#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "aoecr/llm/message.h"
#include "aoecr/util/expected.h"

namespace aoecr::llm {

struct BackendError {
  enum class Kind { kTimeout, kTransport, kNoTranscriptEntry, kInvalidRequest };
  Kind kind = Kind::kTransport;
  std::string detail;

  std::string message() const;
};

using Completion = Expected<std::string, BackendError>;

/// Chat-completion service. Implementations must allow concurrent complete() calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion complete(std::span<const ChatMessage> messages) = 0;
  virtual std::string_view name() const = 0;
};

using BackendPtr = std::shared_ptr<ChatBackend>;

/// Rejects an empty list or one whose first message is not a system message.
std::optional<BackendError> check_messages(std::span<const ChatMessage> messages);

}  // namespace aoecr::llm
