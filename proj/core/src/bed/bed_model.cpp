#include "aoecr/bed/bed_model.h"

#include <algorithm>
#include <cassert>
#include <cmath>

#include <nlohmann/json.hpp>

namespace aoecr::bed {

namespace {

double step_target(double position, const command::CommandStep& step) {
  const double delta = step.action.direction == Direction::kExtend ? step.extent : -step.extent;
  return std::clamp(position + delta, 0.0, 1.0);
}

}  // namespace

nlohmann::json to_json(const Telemetry& t) {
  nlohmann::ordered_json mechs;
  for (auto m : kAllMechanisms) {
    const auto i = static_cast<std::size_t>(m);
    mechs[std::string(to_string(m))] = {{"pos", t.position[i]}, {"moving", t.moving[i]}};
  }
  nlohmann::ordered_json doc;
  doc["ts"] = t.ts;
  doc["mechanisms"] = std::move(mechs);
  if (t.active) {
    doc["active"] = {{"action", action_name(t.active->action)},
                     {"step", t.active->step},
                     {"iteration", t.active->iteration},
                     {"target", t.active->target}};
  } else {
    doc["active"] = nullptr;
  }
  return nlohmann::json::parse(doc.dump());
}

BedModel::BedModel(BedConfig config, BedState initial)
    : config_(std::move(config)), state_(std::move(initial)) {
  if (state_.active) {
    expanded_ = state_.active->plan.expanded_steps();
  }
}

double BedModel::rate_for(const command::CommandStep& step) const {
  return config_.rates[static_cast<std::size_t>(step.action.mechanism)] * step.speed_scale;
}

void BedModel::halt_all() {
  for (auto& a : state_.actuators) {
    a.moving = false;
    a.target.reset();
    a.rate = 0.0;
  }
}

void BedModel::start_plan(const command::CommandPlan& plan) {
  halt_all();
  state_.active.reset();
  expanded_.clear();
  if (plan.kind == command::PlanKind::kStop) return;
  state_.active = ActivePlan{plan, 0};
  expanded_ = plan.expanded_steps();
  begin_current_step();
}

void BedModel::begin_current_step() {
  while (state_.active) {
    auto& cursor = state_.active->cursor;
    if (cursor >= expanded_.size()) {
      state_.active.reset();
      expanded_.clear();
      return;
    }
    const auto& step = expanded_[cursor];
    if (config_.interlock && !config_.interlock(state_, step)) {
      halt_all();
      state_.active.reset();
      expanded_.clear();
      return;
    }
    auto& act = state_.at(step.action.mechanism);
    const double target = step_target(act.position, step);
    if (target == act.position) {
      ++cursor;
      continue;
    }
    act.target = target;
    act.rate = rate_for(step);
    act.moving = true;
    return;
  }
}

void BedModel::tick(double dt) {
  assert(dt > 0.0);
  double remaining = dt;
  while (remaining > 0.0 && state_.active) {
    const auto& step = expanded_[state_.active->cursor];
    auto& act = state_.at(step.action.mechanism);
    assert(act.moving && act.target);
    const double target = *act.target;
    const double distance = std::abs(target - act.position);
    const double needed = distance / act.rate;
    if (needed <= remaining) {
      act.position = target;
      act.moving = false;
      act.target.reset();
      act.rate = 0.0;
      remaining -= needed;
      ++state_.active->cursor;
      begin_current_step();
    } else {
      const double moved = act.rate * remaining;
      act.position = target > act.position ? std::min(target, act.position + moved)
                                           : std::max(target, act.position - moved);
      remaining = 0.0;
    }
  }
  state_.clock += dt;
}

void BedModel::interrupt() {
  halt_all();
  state_.active.reset();
  expanded_.clear();
}

double BedModel::estimate_duration(const command::CommandPlan& plan) const {
  std::array<double, kMechanismCount> pos{};
  for (std::size_t i = 0; i < kMechanismCount; ++i) pos[i] = state_.actuators[i].position;
  double total = 0.0;
  for (const auto& step : plan.expanded_steps()) {
    auto& p = pos[static_cast<std::size_t>(step.action.mechanism)];
    const double target = step_target(p, step);
    total += std::abs(target - p) / rate_for(step);
    p = target;
  }
  return total;
}

Telemetry BedModel::telemetry() const {
  Telemetry t;
  t.ts = state_.clock;
  for (std::size_t i = 0; i < kMechanismCount; ++i) {
    t.position[i] = state_.actuators[i].position;
    t.moving[i] = state_.actuators[i].moving;
  }
  if (state_.active) {
    const auto& plan = state_.active->plan;
    const auto cursor = state_.active->cursor;
    const auto body = std::max<std::size_t>(plan.steps.size(), 1);
    const auto& step = expanded_[cursor];
    StepDescriptor d;
    d.action = step.action;
    d.step = cursor % body;
    d.iteration = static_cast<int>(cursor / body) + 1;
    d.target = state_.at(step.action.mechanism).target.value_or(0.0);
    t.active = d;
  }
  return t;
}

void BedModel::set_position(Mechanism m, double position) {
  state_.at(m).position = std::clamp(position, 0.0, 1.0);
}

}  // namespace aoecr::bed
