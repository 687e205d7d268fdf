#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "aoecr/command/command.h"
#include "aoecr/forge/clarity.h"

namespace aoecr::testkit {

// Closed-form outcome of the oracle fault model for one pair. Round k emits a
// wrong plan with probability eps[k]; a wrong plan is flagged with probability
// `detection` and triggers the next round; after the last round a flagged
// plan becomes a clarification.
struct FaultOutcome {
  double correct = 0.0;
  double clarify = 0.0;
};

inline FaultOutcome fault_outcome(const std::vector<double>& eps, double detection) {
  FaultOutcome out;
  double reach = 1.0;
  for (double e : eps) {
    out.correct += reach * (1.0 - e);
    reach *= e * detection;
  }
  out.clarify = reach;
  return out;
}

/// Expected accuracy of one clarity band, with clarifications counted as
/// correct on unclear pairs only.
inline double expected_accuracy(Clarity c, double generation, double revision, double detection,
                                int max_revisions, bool self_check) {
  if (!self_check) return 1.0 - generation;
  std::vector<double> eps{generation};
  for (int r = 0; r < max_revisions; ++r) eps.push_back(revision);
  const auto o = fault_outcome(eps, detection);
  return c == Clarity::kUnclear ? o.correct + o.clarify : o.correct;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "aoecr") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Random plan that passes validate_plan with default capabilities.
inline command::CommandPlan random_plan(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<std::size_t> action(0, bed::kActionCount - 1);
  std::uniform_real_distribution<double> frac(0.01, 1.0);
  auto step = [&] {
    command::CommandStep s;
    s.action = bed::BedAction::from_index(action(rng));
    s.extent = frac(rng);
    s.speed_scale = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? frac(rng) : 1.0;
    return s;
  };
  switch (kind(rng)) {
    case 0:
      return command::CommandPlan::single(step());
    case 1: {
      std::vector<command::CommandStep> steps(
          std::uniform_int_distribution<std::size_t>(2, 6)(rng));
      for (auto& s : steps) s = step();
      return command::CommandPlan::sequence(std::move(steps));
    }
    default: {
      std::vector<command::CommandStep> steps(
          std::uniform_int_distribution<std::size_t>(1, 3)(rng));
      for (auto& s : steps) s = step();
      return command::CommandPlan::loop(std::move(steps),
                                        std::uniform_int_distribution<int>(1, 4)(rng));
    }
  }
}

/// Fine-step integration of a plan from `start` positions: each step moves its
/// actuator toward clamp(pos +- extent) at rate * speed_scale in increments of
/// `dt`. Returns the final positions and the completion time.
struct Integrated {
  std::array<double, bed::kMechanismCount> position{};
  double seconds = 0.0;
};

inline Integrated integrate_plan(std::array<double, bed::kMechanismCount> start,
                                 const command::CommandPlan& plan, double rate, double dt) {
  Integrated out{start, 0.0};
  for (const auto& s : plan.expanded_steps()) {
    auto& p = out.position[static_cast<std::size_t>(s.action.mechanism)];
    const double sign = s.action.direction == bed::Direction::kExtend ? 1.0 : -1.0;
    const double target = std::min(1.0, std::max(0.0, p + sign * s.extent));
    const double v = rate * s.speed_scale;
    while (std::abs(target - p) > 1e-12) {
      const double step = std::min(std::abs(target - p), v * dt);
      p += sign * step;
      out.seconds += step / v;
    }
    p = target;
  }
  return out;
}

}  // namespace aoecr::testkit
