#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "aoecr/bed/action.h"
#include "aoecr/command/command.h"

namespace aoecr::bed {

struct ActuatorState {
  double position = 0.0;  // stroke fraction, [0, 1]
  double rate = 0.0;      // stroke fraction per second while moving
  std::optional<double> target;
  bool moving = false;

  friend bool operator==(const ActuatorState&, const ActuatorState&) = default;
};

struct ActivePlan {
  command::CommandPlan plan;
  std::size_t cursor = 0;  // index into plan.expanded_steps()

  friend bool operator==(const ActivePlan&, const ActivePlan&) = default;
};

struct BedState {
  std::array<ActuatorState, kMechanismCount> actuators{};
  std::optional<ActivePlan> active;
  double clock = 0.0;

  const ActuatorState& at(Mechanism m) const { return actuators[static_cast<std::size_t>(m)]; }
  ActuatorState& at(Mechanism m) { return actuators[static_cast<std::size_t>(m)]; }

  friend bool operator==(const BedState&, const BedState&) = default;
};

struct StepDescriptor {
  BedAction action;
  std::size_t step = 0;       // index within the plan body
  int iteration = 1;          // 1-based loop iteration
  double target = 0.0;
};

struct Telemetry {
  double ts = 0.0;
  std::array<double, kMechanismCount> position{};
  std::array<bool, kMechanismCount> moving{};
  std::optional<StepDescriptor> active;
};

nlohmann::json to_json(const Telemetry& t);

/// Veto hook consulted before each step starts; the default permits everything.
using InterlockPredicate = std::function<bool(const BedState&, const command::CommandStep&)>;

struct BedConfig {
  std::array<double, kMechanismCount> rates{0.1, 0.1, 0.1, 0.1};  // stroke fraction / s
  double tick_seconds = 0.1;
  InterlockPredicate interlock;
};

/// Digital twin of the nursing bed. Owned by one execution loop; copies are
/// independent snapshots.
class BedModel {
 public:
  explicit BedModel(BedConfig config = {}, BedState initial = {});

  const BedState& state() const { return state_; }
  const BedConfig& config() const { return config_; }
  bool idle() const { return !state_.active.has_value(); }

  /// Preempts any active plan and starts `plan` at its first step. A stop
  /// plan is equivalent to interrupt().
  void start_plan(const command::CommandPlan& plan);

  /// Advances the simulation by dt > 0 seconds.
  void tick(double dt);

  void interrupt();

  /// Seconds needed to run `plan` from the current positions.
  double estimate_duration(const command::CommandPlan& plan) const;

  Telemetry telemetry() const;

  /// Moves an actuator directly; test and restore use only.
  void set_position(Mechanism m, double position);

 private:
  void halt_all();
  // Starts steps from the cursor on, completing zero-length steps immediately.
  void begin_current_step();
  double rate_for(const command::CommandStep& step) const;

  BedConfig config_;
  BedState state_;
  std::vector<command::CommandStep> expanded_;
};

}  // namespace aoecr::bed
