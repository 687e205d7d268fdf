#include "aoecr/llm/prompt.h"

#include "aoecr/command/schema.h"

namespace aoecr::llm {

bool PromptBundle::complete() const {
  return !role_info.empty() && !task_description.empty() && !robot_manual.empty() &&
         !one_shot_example.empty();
}

const PromptBundle& default_bundle() {
  static const PromptBundle bundle = [] {
    PromptBundle b;
    b.role_info =
        "You are the care agent of an elderly-care nursing bed. You talk with the patient "
        "lying in the bed the way an attentive nurse would, and you operate the bed on "
        "their behalf.";
    b.task_description =
        "Each user message starts with a TASK header naming the step you are asked to "
        "perform (classify, generate, check, revise). Follow the instructions under the "
        "header and answer only with the fenced sections they ask for. Never move the bed "
        "unless the request clearly asks for it; when unsure, ask.";
    b.robot_manual =
        "The bed has four mechanisms: lift (raises or lowers the whole bed), backrest "
        "(sitting-lying conversion), left_leg and right_leg (leg sections). Each mechanism "
        "can extend or retract, giving eight actions: lift_extend, lift_retract, "
        "backrest_extend, backrest_retract, left_leg_extend, left_leg_retract, "
        "right_leg_extend, right_leg_retract. Positions are stroke fractions between 0 "
        "(retracted limit) and 1 (extended limit). A step's extent is the stroke fraction "
        "to travel. Plans are single, sequence (two or more steps in order), loop (steps "
        "repeated a bounded number of times) or stop.";
    std::string example =
        "Example.\n"
        "Patient: Could you raise the backrest so I can sit up?\n"
        "Answer:\n"
        "```command\n"
        "{\"kind\":\"single\",\"steps\":[{\"action\":\"backrest_extend\",\"extent\":1.0,"
        "\"speed_scale\":1.0}]}\n"
        "```\n"
        "```response\n"
        "Of course. I'm raising the backrest so you can sit up comfortably.\n"
        "```\n"
        "Every command section must be one JSON document valid against this schema:\n";
    example += command::command_schema_json();
    b.one_shot_example = std::move(example);
    return b;
  }();
  return bundle;
}

std::string system_text(const PromptBundle& bundle) {
  return "# Role\n" + bundle.role_info + "\n\n# Task\n" + bundle.task_description +
         "\n\n# Robot manual\n" + bundle.robot_manual + "\n\n# Output format\n" +
         bundle.one_shot_example;
}

Messages render_prompt(const PromptBundle& bundle, std::span<const ChatMessage> history,
                       std::string_view request) {
  Messages out;
  out.reserve(history.size() + 2);
  out.push_back({Role::kSystem, system_text(bundle)});
  out.insert(out.end(), history.begin(), history.end());
  out.push_back({Role::kUser, std::string(request)});
  return out;
}

}  // namespace aoecr::llm
