#include "aoecr/llm/message.h"

#include "aoecr/llm/backend.h"
#include "aoecr/util/text.h"

namespace aoecr::llm {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

std::string digest(std::span<const ChatMessage> messages) {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& m : messages) {
    h = text::fnv1a(to_string(m.role), h);
    h = text::fnv1a("\x1f", h);
    h = text::fnv1a(m.content, h);
    h = text::fnv1a("\x1e", h);
  }
  return text::hex64(h);
}

std::string BackendError::message() const {
  std::string kind_name;
  switch (kind) {
    case Kind::kTimeout:
      kind_name = "timeout";
      break;
    case Kind::kTransport:
      kind_name = "transport";
      break;
    case Kind::kNoTranscriptEntry:
      kind_name = "no-transcript-entry";
      break;
    case Kind::kInvalidRequest:
      kind_name = "invalid-request";
      break;
  }
  return detail.empty() ? kind_name : kind_name + ": " + detail;
}

std::optional<BackendError> check_messages(std::span<const ChatMessage> messages) {
  if (messages.empty()) return BackendError{BackendError::Kind::kInvalidRequest, "no messages"};
  if (messages.front().role != Role::kSystem) {
    return BackendError{BackendError::Kind::kInvalidRequest, "first message must be system"};
  }
  for (const auto& m : messages) {
    if (m.content.empty()) {
      return BackendError{BackendError::Kind::kInvalidRequest, "empty message content"};
    }
  }
  return std::nullopt;
}

}  // namespace aoecr::llm
