#include "aoecr/cos/prompts.h"

#include "aoecr/llm/prompt.h"
#include "aoecr/llm/task.h"

namespace aoecr::cos::prompts {

namespace {

llm::TaskBlock base(std::string task, const SessionContext& ctx, std::string_view request) {
  llm::TaskBlock b;
  b.task = std::move(task);
  if (!ctx.turn_id.empty()) b.fields[llm::fields::kRequestId] = ctx.turn_id;
  b.fields[llm::fields::kRequest] = std::string(request);
  return b;
}

llm::Messages render(const llm::PromptBundle& bundle, const SessionContext& ctx,
                     const llm::TaskBlock& block) {
  return llm::render_prompt(bundle, ctx.history, llm::render_task(block));
}

}  // namespace

llm::Messages classification(const llm::PromptBundle& bundle, const SessionContext& ctx,
                             std::string_view request) {
  auto b = base(llm::tasks::kClassify, ctx, request);
  b.instructions =
      "Classify the patient's request as exactly one of: unclear, single_action, "
      "action_sequence, loop_action. Answer with a ```classification fence holding the class. "
      "If the request is unclear, add a ```question fence with one short, kind question that "
      "would make it specific.";
  return render(bundle, ctx, b);
}

llm::Messages generation(const llm::PromptBundle& bundle, const SessionContext& ctx,
                         std::string_view request, std::optional<std::string_view> parse_error) {
  auto b = base(llm::tasks::kGenerate, ctx, request);
  if (parse_error) {
    b.fields[llm::fields::kRound] = "retry";
    b.fields[llm::fields::kParseError] = std::string(*parse_error);
  }
  b.instructions =
      "Write the control command for this request and your reply to the patient. Answer "
      "with a ```command fence holding one JSON command and a ```response fence holding the "
      "reply.";
  if (parse_error) {
    b.instructions += " Your previous answer could not be used (see PARSE_ERROR); follow the "
                      "output format exactly.";
  }
  return render(bundle, ctx, b);
}

llm::Messages check(const llm::PromptBundle& bundle, const SessionContext& ctx,
                    std::string_view request, const command::CommandPlan& plan, int round) {
  auto b = base(llm::tasks::kCheck, ctx, request);
  b.fields[llm::fields::kRound] = std::to_string(round);
  b.fields[llm::fields::kCommand] = command::serialize(plan);
  b.instructions =
      "Check whether the COMMAND does exactly what the patient asked for: the right "
      "mechanisms, directions, order and repetitions. Answer with a ```verdict fence holding "
      "either `consistent` or `mismatch: <what is wrong>`.";
  return render(bundle, ctx, b);
}

llm::Messages revision(const llm::PromptBundle& bundle, const SessionContext& ctx,
                       std::string_view request, const command::CommandPlan& plan,
                       std::string_view reason, int round) {
  auto b = base(llm::tasks::kRevise, ctx, request);
  b.fields[llm::fields::kRound] = std::to_string(round);
  b.fields[llm::fields::kCommand] = command::serialize(plan);
  b.fields[llm::fields::kReason] = std::string(reason);
  b.instructions =
      "The COMMAND was found not to match the request for the REASON given. Write a corrected "
      "command and reply, with a ```command fence and a ```response fence.";
  return render(bundle, ctx, b);
}

}  // namespace aoecr::cos::prompts
