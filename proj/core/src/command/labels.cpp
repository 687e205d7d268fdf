#include "aoecr/command/labels.h"

#include <algorithm>
#include <map>

namespace aoecr::command {

namespace {

using bed::BedAction;
using bed::Direction;
using bed::Mechanism;

CommandStep step(Mechanism m, Direction d, double extent = 1.0) {
  return {BedAction{m, d}, extent, 1.0};
}

const std::map<std::string, CommandPlan, std::less<>>& composite_plans() {
  static const std::map<std::string, CommandPlan, std::less<>> plans = [] {
    constexpr auto E = Direction::kExtend;
    constexpr auto R = Direction::kRetract;
    std::map<std::string, CommandPlan, std::less<>> m;
    m["legs_raise"] = CommandPlan::sequence(
        {step(Mechanism::kLeftLeg, E), step(Mechanism::kRightLeg, E)});
    m["legs_lower"] = CommandPlan::sequence(
        {step(Mechanism::kLeftLeg, R), step(Mechanism::kRightLeg, R)});
    m["sit_up_high"] = CommandPlan::sequence(
        {step(Mechanism::kLift, E), step(Mechanism::kBackrest, E)});
    m["lie_flat"] = CommandPlan::sequence({step(Mechanism::kBackrest, R),
                                           step(Mechanism::kLeftLeg, R),
                                           step(Mechanism::kRightLeg, R)});
    m["leg_exercise"] = CommandPlan::loop(
        {step(Mechanism::kLeftLeg, E, 0.5), step(Mechanism::kLeftLeg, R, 0.5),
         step(Mechanism::kRightLeg, E, 0.5), step(Mechanism::kRightLeg, R, 0.5)},
        kDefaultLoopRepetitions);
    m["back_rocking"] = CommandPlan::loop(
        {step(Mechanism::kBackrest, E, 0.5), step(Mechanism::kBackrest, R, 0.5)},
        kDefaultLoopRepetitions);
    return m;
  }();
  return plans;
}

}  // namespace

const std::vector<std::string>& single_action_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> out;
    for (const auto& a : bed::all_actions()) out.push_back(bed::action_name(a));
    return out;
  }();
  return labels;
}

const std::vector<std::string>& label_vocabulary() {
  static const std::vector<std::string> labels = [] {
    auto out = single_action_labels();
    for (const auto& [name, _] : composite_plans()) out.push_back(name);
    return out;
  }();
  return labels;
}

bool is_known_label(std::string_view label) {
  const auto& v = label_vocabulary();
  return std::find(v.begin(), v.end(), label) != v.end();
}

Expected<CommandPlan, UnknownLabel> plan_from_label(std::string_view label,
                                                   const std::optional<DegreeModifier>& degree) {
  CommandPlan plan;
  if (auto action = bed::action_from_name(label)) {
    plan = CommandPlan::single({*action, 1.0, 1.0});
  } else if (auto it = composite_plans().find(label); it != composite_plans().end()) {
    plan = it->second;
  } else {
    return unexpected(UnknownLabel{std::string(label)});
  }
  if (degree) {
    for (auto& s : plan.steps) s.extent *= degree->extent_fraction;
  }
  return plan;
}

}  // namespace aoecr::command
