#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aoecr::llm {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role r);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

using Messages = std::vector<ChatMessage>;

/// Hex digest of the exact rendered messages; keys scripted transcripts.
std::string digest(std::span<const ChatMessage> messages);

}  // namespace aoecr::llm
