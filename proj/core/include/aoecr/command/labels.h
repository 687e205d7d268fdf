#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aoecr/command/command.h"
#include "aoecr/command/degree.h"
#include "aoecr/util/expected.h"

namespace aoecr::command {

// Ground-truth action labels: the eight single actions plus a few named
// composite routines.
const std::vector<std::string>& label_vocabulary();
const std::vector<std::string>& single_action_labels();
bool is_known_label(std::string_view label);

inline constexpr int kDefaultLoopRepetitions = 3;

struct UnknownLabel {
  std::string label;
};

/// Deterministic canonical plan for a label; the degree scales every step.
Expected<CommandPlan, UnknownLabel> plan_from_label(std::string_view label,
                                                   const std::optional<DegreeModifier>& degree = {});

}  // namespace aoecr::command
