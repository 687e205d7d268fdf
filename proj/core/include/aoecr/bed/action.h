#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace aoecr::bed {

// The four actuating mechanisms of the nursing bed.
enum class Mechanism : std::uint8_t { kLift = 0, kBackrest, kLeftLeg, kRightLeg };

inline constexpr std::size_t kMechanismCount = 4;
inline constexpr std::array<Mechanism, kMechanismCount> kAllMechanisms{
    Mechanism::kLift, Mechanism::kBackrest, Mechanism::kLeftLeg, Mechanism::kRightLeg};

enum class Direction : std::uint8_t { kExtend = 0, kRetract };

struct BedAction {
  Mechanism mechanism = Mechanism::kLift;
  Direction direction = Direction::kExtend;

  friend bool operator==(const BedAction&, const BedAction&) = default;

  /// Dense index in [0, 8): mechanism * 2 + direction.
  constexpr std::size_t index() const {
    return static_cast<std::size_t>(mechanism) * 2 + static_cast<std::size_t>(direction);
  }
  static constexpr BedAction from_index(std::size_t i) {
    return {static_cast<Mechanism>(i / 2), static_cast<Direction>(i % 2)};
  }
};

inline constexpr std::size_t kActionCount = kMechanismCount * 2;

std::string_view to_string(Mechanism m);
std::string_view to_string(Direction d);
std::optional<Mechanism> mechanism_from_string(std::string_view s);

/// Canonical action name, e.g. "backrest_extend".
std::string action_name(BedAction a);
std::optional<BedAction> action_from_name(std::string_view name);

std::array<BedAction, kActionCount> all_actions();

}  // namespace aoecr::bed
