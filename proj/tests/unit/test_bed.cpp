#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "aoecr/bed/bed_model.h"
#include "test_support.h"

using namespace aoecr;
using bed::BedModel;
using bed::Direction;
using bed::Mechanism;
using command::CommandPlan;
using command::CommandStep;

namespace {

CommandStep step(Mechanism m, Direction d, double extent = 1.0) { return {{m, d}, extent, 1.0}; }

std::array<double, bed::kMechanismCount> positions(const BedModel& b) {
  std::array<double, bed::kMechanismCount> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b.state().actuators[i].position;
  return out;
}

void run_to_idle(BedModel& b, double dt, int max_ticks = 100000) {
  for (int i = 0; i < max_ticks && !b.idle(); ++i) b.tick(dt);
}

}  // namespace

TEST(StartPlan, FullStrokeFromZero) {
  BedModel b;
  b.start_plan(CommandPlan::single(step(Mechanism::kBackrest, Direction::kExtend)));
  const auto& a = b.state().at(Mechanism::kBackrest);
  EXPECT_TRUE(a.moving);
  EXPECT_DOUBLE_EQ(*a.target, 1.0);
  EXPECT_GT(a.rate, 0.0);
  EXPECT_FALSE(b.idle());
}

TEST(StartPlan, TargetIsPositionPlusExtent) {
  BedModel b;
  b.set_position(Mechanism::kBackrest, 0.5);
  b.start_plan(CommandPlan::single(step(Mechanism::kBackrest, Direction::kExtend, 0.25)));
  EXPECT_DOUBLE_EQ(*b.state().at(Mechanism::kBackrest).target, 0.75);
}

TEST(StartPlan, TargetClampedAtLimit) {
  BedModel b;
  b.set_position(Mechanism::kLift, 0.9);
  b.start_plan(CommandPlan::single(step(Mechanism::kLift, Direction::kExtend, 0.5)));
  EXPECT_DOUBLE_EQ(*b.state().at(Mechanism::kLift).target, 1.0);
}

TEST(StartPlan, PreemptsActivePlan) {
  BedModel b;
  b.start_plan(CommandPlan::single(step(Mechanism::kBackrest, Direction::kExtend)));
  b.tick(1.0);
  b.start_plan(CommandPlan::single(step(Mechanism::kLift, Direction::kExtend)));
  EXPECT_FALSE(b.state().at(Mechanism::kBackrest).moving);
  EXPECT_FALSE(b.state().at(Mechanism::kBackrest).target);
  EXPECT_TRUE(b.state().at(Mechanism::kLift).moving);
  const double frozen = b.state().at(Mechanism::kBackrest).position;
  b.tick(1.0);
  EXPECT_DOUBLE_EQ(b.state().at(Mechanism::kBackrest).position, frozen);
}

TEST(Tick, LinearIntegration) {
  BedModel b;
  b.start_plan(CommandPlan::single(step(Mechanism::kLift, Direction::kExtend)));
  b.tick(5.0);
  EXPECT_NEAR(b.state().at(Mechanism::kLift).position, 0.5, 1e-12);
}

TEST(Tick, NoOvershoot) {
  BedModel b;
  b.set_position(Mechanism::kLift, 0.48);
  b.start_plan(CommandPlan::single(step(Mechanism::kLift, Direction::kExtend, 0.02)));
  b.tick(5.0);
  EXPECT_EQ(b.state().at(Mechanism::kLift).position, 0.5);
  EXPECT_TRUE(b.idle());
}

TEST(Tick, RemainderCarriesIntoNextStep) {
  BedModel b;
  const auto plan = CommandPlan::sequence(
      {step(Mechanism::kLift, Direction::kExtend, 0.33), step(Mechanism::kBackrest, Direction::kExtend, 0.71)});
  b.start_plan(plan);
  b.tick(4.0);  // first step completes at 3.3 s
  EXPECT_EQ(b.state().at(Mechanism::kLift).position, 0.33);
  EXPECT_NEAR(b.state().at(Mechanism::kBackrest).position, 0.07, 1e-12);
  run_to_idle(b, 0.37);
  const auto oracle = testkit::integrate_plan({}, plan, 0.1, 0.001);
  const auto got = positions(b);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], oracle.position[i], 1e-9);
}

TEST(Tick, LoopRepeatsBody) {
  BedModel b;
  b.start_plan(CommandPlan::loop({step(Mechanism::kLeftLeg, Direction::kExtend, 0.5),
                                  step(Mechanism::kLeftLeg, Direction::kRetract, 0.5)},
                                 3));
  double t = 0.0;
  while (!b.idle()) {
    b.tick(0.1);
    t += 0.1;
  }
  EXPECT_NEAR(t, 30.0, 0.1 + 1e-9);
  EXPECT_NEAR(b.state().at(Mechanism::kLeftLeg).position, 0.0, 1e-12);
}

TEST(Tick, ClockNeverDecreases) {
  BedModel b;
  double last = b.state().clock;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    if (i % 50 == 0) b.start_plan(testkit::random_plan(rng));
    b.tick(std::uniform_real_distribution<double>(0.001, 0.5)(rng));
    EXPECT_GE(b.state().clock, last);
    last = b.state().clock;
  }
}

TEST(Interrupt, FreezesPosition) {
  BedModel b;
  b.start_plan(CommandPlan::single(step(Mechanism::kBackrest, Direction::kExtend)));
  b.tick(3.7);
  b.interrupt();
  EXPECT_TRUE(b.idle());
  EXPECT_NEAR(b.state().at(Mechanism::kBackrest).position, 0.37, 1e-12);
  for (const auto& a : b.state().actuators) {
    EXPECT_FALSE(a.moving);
    EXPECT_FALSE(a.target);
  }
}

TEST(Interrupt, IdleIsNoOp) {
  BedModel b;
  b.set_position(Mechanism::kLift, 0.2);
  const auto before = b.state();
  b.interrupt();
  EXPECT_EQ(b.state(), before);
}

TEST(Interrupt, LoopStopsMidIteration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    BedModel b;
    b.start_plan(CommandPlan::loop({step(Mechanism::kBackrest, Direction::kExtend, 0.5),
                                    step(Mechanism::kBackrest, Direction::kRetract, 0.5)},
                                   5));
    const int stop_at = std::uniform_int_distribution<int>(1, 499)(rng);
    for (int i = 0; i < stop_at; ++i) b.tick(0.1);
    b.interrupt();
    const auto frozen = positions(b);
    for (int i = 0; i < 200; ++i) b.tick(0.1);
    EXPECT_EQ(positions(b), frozen);
    EXPECT_TRUE(b.idle());
  }
}

TEST(Interrupt, StopPlanEqualsInterrupt) {
  BedModel a;
  BedModel b;
  const auto plan = CommandPlan::single(step(Mechanism::kLift, Direction::kExtend));
  a.start_plan(plan);
  b.start_plan(plan);
  a.tick(2.0);
  b.tick(2.0);
  a.interrupt();
  b.start_plan(CommandPlan::stop());
  EXPECT_EQ(a.state(), b.state());
}

TEST(EstimateDuration, FullStroke) {
  BedModel b;
  EXPECT_DOUBLE_EQ(b.estimate_duration(CommandPlan::single(step(Mechanism::kLift, Direction::kExtend))), 10.0);
  EXPECT_DOUBLE_EQ(
      b.estimate_duration(CommandPlan::single(step(Mechanism::kLift, Direction::kExtend, 0.25))), 2.5);
}

TEST(EstimateDuration, SequenceMatchesSimulation) {
  BedModel b;
  b.set_position(Mechanism::kBackrest, 0.3);
  const auto plan = CommandPlan::sequence({step(Mechanism::kLift, Direction::kExtend, 0.6),
                                           step(Mechanism::kBackrest, Direction::kRetract, 0.5),
                                           step(Mechanism::kLift, Direction::kRetract, 0.2)});
  const double est = b.estimate_duration(plan);
  const auto oracle = testkit::integrate_plan(positions(b), plan, 0.1, 0.001);
  EXPECT_NEAR(est, oracle.seconds, 1e-9);
  b.start_plan(plan);
  double t = 0.0;
  while (!b.idle()) {
    b.tick(0.1);
    t += 0.1;
  }
  EXPECT_NEAR(t, est, 0.1);
}

TEST(Telemetry, PureRead) {
  BedModel b;
  b.start_plan(CommandPlan::single(step(Mechanism::kRightLeg, Direction::kExtend)));
  b.tick(1.0);
  const auto before = b.state();
  const auto t = b.telemetry();
  EXPECT_EQ(b.state(), before);
  ASSERT_TRUE(t.active);
  EXPECT_EQ(bed::action_name(t.active->action), "right_leg_extend");
  const auto j = bed::to_json(t);
  EXPECT_NEAR(j["mechanisms"]["right_leg"]["pos"].get<double>(), 0.1, 1e-12);
  EXPECT_TRUE(j["mechanisms"]["right_leg"]["moving"].get<bool>());
  EXPECT_EQ(j["active"]["action"], "right_leg_extend");
  EXPECT_TRUE(bed::to_json(BedModel().telemetry())["active"].is_null());
}

TEST(Interlock, VetoHaltsPlan) {
  bed::BedConfig cfg;
  cfg.interlock = [](const bed::BedState&, const CommandStep& s) {
    return s.action.mechanism != Mechanism::kLift;
  };
  BedModel b(cfg);
  b.start_plan(CommandPlan::sequence({step(Mechanism::kBackrest, Direction::kExtend, 0.2),
                                      step(Mechanism::kLift, Direction::kExtend)}));
  run_to_idle(b, 0.1);
  EXPECT_NEAR(b.state().at(Mechanism::kBackrest).position, 0.2, 1e-12);
  EXPECT_EQ(b.state().at(Mechanism::kLift).position, 0.0);
}

TEST(Property, SafetyEnvelopeAndPreemption) {
  std::mt19937_64 rng(2024);
  BedModel b;
  bool interrupted = false;
  std::array<double, bed::kMechanismCount> frozen{};
  for (int i = 0; i < 10000; ++i) {
    const int op = std::uniform_int_distribution<int>(0, 19)(rng);
    if (op == 0) {
      b.start_plan(testkit::random_plan(rng));
      interrupted = false;
    } else if (op == 1) {
      b.interrupt();
      interrupted = true;
      frozen = positions(b);
    } else {
      b.tick(std::uniform_real_distribution<double>(0.01, 1.0)(rng));
    }
    for (const auto& a : b.state().actuators) {
      ASSERT_GE(a.position, 0.0);
      ASSERT_LE(a.position, 1.0);
      if (a.moving) {
        ASSERT_TRUE(a.target);
        ASSERT_GT(a.rate, 0.0);
      }
    }
    if (interrupted) ASSERT_EQ(positions(b), frozen);
  }
}

TEST(Property, StepMonotoneTowardTarget) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    BedModel b;
    for (auto m : bed::kAllMechanisms) {
      b.set_position(m, std::uniform_real_distribution<double>(0, 1)(rng));
    }
    const auto s = CommandStep{bed::BedAction::from_index(std::uniform_int_distribution<std::size_t>(0, 7)(rng)),
                               std::uniform_real_distribution<double>(0.01, 1)(rng), 1.0};
    b.start_plan(CommandPlan::single(s));
    const auto& a = b.state().at(s.action.mechanism);
    double prev = a.position;
    const double sign = s.action.direction == Direction::kExtend ? 1.0 : -1.0;
    while (!b.idle()) {
      b.tick(0.05);
      EXPECT_GE(sign * (a.position - prev), 0.0);
      prev = a.position;
    }
  }
}

TEST(Property, Determinism) {
  auto run = [] {
    std::mt19937_64 rng(77);
    BedModel b;
    for (int i = 0; i < 2000; ++i) {
      if (i % 37 == 0) b.start_plan(testkit::random_plan(rng));
      if (i % 101 == 0) b.interrupt();
      b.tick(0.1);
    }
    return b.state();
  };
  EXPECT_EQ(run(), run());
}

TEST(Property, DurationConsistency) {
  std::mt19937_64 rng(31);
  const double tick = 0.1;
  for (int i = 0; i < 1000; ++i) {
    BedModel b;
    for (auto m : bed::kAllMechanisms) {
      b.set_position(m, std::uniform_real_distribution<double>(0, 1)(rng));
    }
    const auto plan = testkit::random_plan(rng);
    const double est = b.estimate_duration(plan);
    b.start_plan(plan);
    int ticks = 0;
    while (!b.idle()) {
      b.tick(tick);
      ++ticks;
    }
    ASSERT_LE(std::abs(ticks * tick - est), tick + 1e-9) << command::serialize(plan);
  }
}
