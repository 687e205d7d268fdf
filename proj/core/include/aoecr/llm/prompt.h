#pragma once

#include <span>
#include <string>
#include <string_view>

#include "aoecr/llm/message.h"

namespace aoecr::llm {

struct PromptBundle {
  std::string role_info;
  std::string task_description;
  std::string robot_manual;
  std::string one_shot_example;  // request + canonical command + response

  bool complete() const;
};

/// The agent's built-in bundle. Its one-shot example embeds the canonical
/// command schema verbatim.
const PromptBundle& default_bundle();

/// role info, task, manual and one-shot joined into the system message body.
std::string system_text(const PromptBundle& bundle);

/// [system, history..., user(request)]. Deterministic.
Messages render_prompt(const PromptBundle& bundle, std::span<const ChatMessage> history,
                       std::string_view request);

}  // namespace aoecr::llm
