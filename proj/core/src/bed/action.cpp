#include "aoecr/bed/action.h"

namespace aoecr::bed {

std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kLift:
      return "lift";
    case Mechanism::kBackrest:
      return "backrest";
    case Mechanism::kLeftLeg:
      return "left_leg";
    case Mechanism::kRightLeg:
      return "right_leg";
  }
  return "unknown";
}

std::string_view to_string(Direction d) {
  return d == Direction::kExtend ? "extend" : "retract";
}

std::optional<Mechanism> mechanism_from_string(std::string_view s) {
  for (auto m : kAllMechanisms) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::string action_name(BedAction a) {
  std::string out(to_string(a.mechanism));
  out += '_';
  out += to_string(a.direction);
  return out;
}

std::optional<BedAction> action_from_name(std::string_view name) {
  for (const auto& a : all_actions()) {
    if (action_name(a) == name) return a;
  }
  return std::nullopt;
}

std::array<BedAction, kActionCount> all_actions() {
  std::array<BedAction, kActionCount> out{};
  for (std::size_t i = 0; i < kActionCount; ++i) out[i] = BedAction::from_index(i);
  return out;
}

}  // namespace aoecr::bed
