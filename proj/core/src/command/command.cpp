#include "aoecr/command/command.h"

#include <algorithm>
#include <cstdint>
#include <set>

#include <nlohmann/json.hpp>

namespace aoecr::command {

using ojson = nlohmann::ordered_json;

std::string_view to_string(PlanKind k) {
  switch (k) {
    case PlanKind::kSingle:
      return "single";
    case PlanKind::kSequence:
      return "sequence";
    case PlanKind::kLoop:
      return "loop";
    case PlanKind::kStop:
      return "stop";
  }
  return "unknown";
}

namespace {

std::optional<PlanKind> kind_from_string(std::string_view s) {
  for (auto k : {PlanKind::kSingle, PlanKind::kSequence, PlanKind::kLoop, PlanKind::kStop}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

bool in_unit_interval(double v) { return v > 0.0 && v <= 1.0; }

std::string step_path(std::size_t i) { return "steps[" + std::to_string(i) + "]"; }

}  // namespace

CommandPlan CommandPlan::single(CommandStep step) { return {PlanKind::kSingle, {step}, 1}; }

CommandPlan CommandPlan::sequence(std::vector<CommandStep> steps) {
  return {PlanKind::kSequence, std::move(steps), 1};
}

CommandPlan CommandPlan::loop(std::vector<CommandStep> steps, int repetitions) {
  return {PlanKind::kLoop, std::move(steps), repetitions};
}

CommandPlan CommandPlan::stop() { return {PlanKind::kStop, {}, 1}; }

std::vector<CommandStep> CommandPlan::expanded_steps() const {
  if (kind != PlanKind::kLoop) return steps;
  std::vector<CommandStep> out;
  out.reserve(steps.size() * static_cast<std::size_t>(std::max(repetitions, 0)));
  for (int r = 0; r < repetitions; ++r) out.insert(out.end(), steps.begin(), steps.end());
  return out;
}

std::string serialize(const CommandPlan& plan) {
  ojson doc;
  doc["kind"] = std::string(to_string(plan.kind));
  ojson steps = ojson::array();
  for (const auto& s : plan.steps) {
    ojson step;
    step["action"] = bed::action_name(s.action);
    step["extent"] = s.extent;
    step["speed_scale"] = s.speed_scale;
    steps.push_back(std::move(step));
  }
  doc["steps"] = std::move(steps);
  if (plan.kind == PlanKind::kLoop) doc["repetitions"] = plan.repetitions;
  return doc.dump();
}

Expected<CommandPlan, ParseError> parse_plan(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    return unexpected(ParseError{"$", std::string("invalid JSON: ") + e.what()});
  }
  if (!doc.is_object()) return unexpected(ParseError{"$", "expected an object"});

  for (const auto& [key, _] : doc.items()) {
    if (key != "kind" && key != "steps" && key != "repetitions") {
      return unexpected(ParseError{key, "unknown field"});
    }
  }

  CommandPlan plan;
  if (!doc.contains("kind")) return unexpected(ParseError{"kind", "missing"});
  if (!doc["kind"].is_string()) return unexpected(ParseError{"kind", "expected a string"});
  auto kind = kind_from_string(doc["kind"].get<std::string>());
  if (!kind) return unexpected(ParseError{"kind", "unknown plan kind"});
  plan.kind = *kind;

  if (!doc.contains("steps")) return unexpected(ParseError{"steps", "missing"});
  const auto& steps = doc["steps"];
  if (!steps.is_array()) return unexpected(ParseError{"steps", "expected an array"});
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const auto path = step_path(i);
    if (!s.is_object()) return unexpected(ParseError{path, "expected an object"});
    for (const auto& [key, _] : s.items()) {
      if (key != "action" && key != "extent" && key != "speed_scale") {
        return unexpected(ParseError{path + "." + key, "unknown field"});
      }
    }
    CommandStep step;
    if (!s.contains("action") || !s["action"].is_string()) {
      return unexpected(ParseError{path + ".action", "missing or not a string"});
    }
    auto action = bed::action_from_name(s["action"].get<std::string>());
    if (!action) return unexpected(ParseError{path + ".action", "unknown action"});
    step.action = *action;
    if (!s.contains("extent") || !s["extent"].is_number()) {
      return unexpected(ParseError{path + ".extent", "missing or not a number"});
    }
    step.extent = s["extent"].get<double>();
    if (!in_unit_interval(step.extent)) {
      return unexpected(ParseError{path + ".extent", "must be in (0, 1]"});
    }
    if (s.contains("speed_scale")) {
      if (!s["speed_scale"].is_number()) {
        return unexpected(ParseError{path + ".speed_scale", "not a number"});
      }
      step.speed_scale = s["speed_scale"].get<double>();
      if (!in_unit_interval(step.speed_scale)) {
        return unexpected(ParseError{path + ".speed_scale", "must be in (0, 1]"});
      }
    }
    plan.steps.push_back(step);
  }

  const auto n = plan.steps.size();
  switch (plan.kind) {
    case PlanKind::kSingle:
      if (n != 1) return unexpected(ParseError{"steps", "single plan needs exactly 1 step"});
      break;
    case PlanKind::kSequence:
      if (n < 2) return unexpected(ParseError{"steps", "sequence plan needs at least 2 steps"});
      break;
    case PlanKind::kLoop:
      if (n < 1) return unexpected(ParseError{"steps", "loop plan needs at least 1 step"});
      break;
    case PlanKind::kStop:
      if (n != 0) return unexpected(ParseError{"steps", "stop plan takes no steps"});
      break;
  }

  if (plan.kind == PlanKind::kLoop) {
    if (!doc.contains("repetitions")) return unexpected(ParseError{"repetitions", "missing"});
    const auto& reps = doc["repetitions"];
    if (!reps.is_number_integer()) {
      return unexpected(ParseError{"repetitions", "expected an integer"});
    }
    const auto value = reps.get<std::int64_t>();
    if (value < 1) return unexpected(ParseError{"repetitions", "must be at least 1"});
    if (value > 1'000'000) return unexpected(ParseError{"repetitions", "out of range"});
    plan.repetitions = static_cast<int>(value);
  } else if (doc.contains("repetitions")) {
    return unexpected(ParseError{"repetitions", "only allowed on loop plans"});
  }
  return plan;
}

ViolationList validate_plan(const CommandPlan& plan, const Capabilities& caps) {
  ViolationList out;
  const auto n = plan.steps.size();
  switch (plan.kind) {
    case PlanKind::kSingle:
      if (n != 1) out.push_back({"steps", "single plan needs exactly 1 step"});
      break;
    case PlanKind::kSequence:
      if (n < 2) out.push_back({"steps", "sequence plan needs at least 2 steps"});
      break;
    case PlanKind::kLoop:
      if (n < 1) out.push_back({"steps", "loop plan needs at least 1 step"});
      if (plan.repetitions < 1) out.push_back({"repetitions", "must be at least 1"});
      if (plan.repetitions > caps.max_repetitions) {
        out.push_back({"repetitions", "repetitions exceeds cap of " +
                                          std::to_string(caps.max_repetitions)});
      }
      break;
    case PlanKind::kStop:
      if (n != 0) out.push_back({"steps", "stop plan takes no steps"});
      break;
  }
  if (n > caps.max_sequence_steps) {
    out.push_back({"steps", "step count " + std::to_string(n) + " exceeds cap of " +
                                std::to_string(caps.max_sequence_steps)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = plan.steps[i];
    const auto path = step_path(i);
    if (std::find(caps.actions.begin(), caps.actions.end(), s.action) == caps.actions.end()) {
      out.push_back({path + ".action", "action " + bed::action_name(s.action) +
                                           " not supported by this bed"});
    }
    if (!in_unit_interval(s.extent)) out.push_back({path + ".extent", "must be in (0, 1]"});
    if (!in_unit_interval(s.speed_scale)) {
      out.push_back({path + ".speed_scale", "must be in (0, 1]"});
    }
  }
  return out;
}

}  // namespace aoecr::command
