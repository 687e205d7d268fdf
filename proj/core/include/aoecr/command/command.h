#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "aoecr/bed/action.h"
#include "aoecr/util/expected.h"

namespace aoecr::command {

struct CommandStep {
  bed::BedAction action;
  double extent = 1.0;       // stroke fraction, (0, 1]
  double speed_scale = 1.0;  // (0, 1]

  friend bool operator==(const CommandStep&, const CommandStep&) = default;
};

enum class PlanKind { kSingle, kSequence, kLoop, kStop };

std::string_view to_string(PlanKind k);

struct CommandPlan {
  PlanKind kind = PlanKind::kStop;
  std::vector<CommandStep> steps;
  int repetitions = 1;  // meaningful for kLoop only

  friend bool operator==(const CommandPlan&, const CommandPlan&) = default;

  static CommandPlan single(CommandStep step);
  static CommandPlan sequence(std::vector<CommandStep> steps);
  static CommandPlan loop(std::vector<CommandStep> steps, int repetitions);
  static CommandPlan stop();

  /// Steps in execution order with loop bodies expanded.
  std::vector<CommandStep> expanded_steps() const;
};

/// Canonical serialization. Key order and number formatting are fixed, so two
/// plans are equal exactly when their serializations are byte-identical.
std::string serialize(const CommandPlan& plan);

struct ParseError {
  std::string path;
  std::string reason;

  std::string message() const { return path + ": " + reason; }
};

/// Strict parse of the canonical schema; unknown fields are rejected.
Expected<CommandPlan, ParseError> parse_plan(std::string_view text);

struct Capabilities {
  std::vector<bed::BedAction> actions = [] {
    auto all = bed::all_actions();
    return std::vector<bed::BedAction>(all.begin(), all.end());
  }();
  int max_repetitions = 10;
  std::size_t max_sequence_steps = 12;
};

struct Violation {
  std::string path;
  std::string reason;
};

using ViolationList = std::vector<Violation>;

/// Returns every violation found; an empty list means the plan is executable.
ViolationList validate_plan(const CommandPlan& plan, const Capabilities& caps = {});

}  // namespace aoecr::command
