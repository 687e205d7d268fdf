#pragma once

#include <optional>
#include <string_view>

#include "aoecr/command/command.h"
#include "aoecr/cos/pipeline.h"
#include "aoecr/llm/message.h"

// Message builders for each chain step. Scripted transcripts are keyed by the
// digest of these exact messages.
namespace aoecr::cos::prompts {

llm::Messages classification(const llm::PromptBundle& bundle, const SessionContext& ctx,
                             std::string_view request);

/// `parse_error` is set on the reprompt after a malformed emission.
llm::Messages generation(const llm::PromptBundle& bundle, const SessionContext& ctx,
                         std::string_view request,
                         std::optional<std::string_view> parse_error = std::nullopt);

llm::Messages check(const llm::PromptBundle& bundle, const SessionContext& ctx,
                    std::string_view request, const command::CommandPlan& plan, int round);

llm::Messages revision(const llm::PromptBundle& bundle, const SessionContext& ctx,
                       std::string_view request, const command::CommandPlan& plan,
                       std::string_view reason, int round);

}  // namespace aoecr::cos::prompts
