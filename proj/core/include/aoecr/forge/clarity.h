#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace aoecr {

enum class Clarity : std::uint8_t { kHigh = 0, kMedium, kLow, kUnclear };

inline constexpr std::size_t kClarityCount = 4;
inline constexpr std::array<Clarity, kClarityCount> kAllClarities{
    Clarity::kHigh, Clarity::kMedium, Clarity::kLow, Clarity::kUnclear};

/// Per-clarity table indexed by Clarity.
template <typename T>
using PerClarity = std::array<T, kClarityCount>;

constexpr std::string_view to_string(Clarity c) {
  switch (c) {
    case Clarity::kHigh:
      return "high";
    case Clarity::kMedium:
      return "medium";
    case Clarity::kLow:
      return "low";
    case Clarity::kUnclear:
      return "unclear";
  }
  return "unknown";
}

constexpr std::optional<Clarity> clarity_from_string(std::string_view s) {
  for (auto c : kAllClarities) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

constexpr std::size_t index(Clarity c) { return static_cast<std::size_t>(c); }

}  // namespace aoecr
