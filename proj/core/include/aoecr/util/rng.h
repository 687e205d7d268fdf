#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "aoecr/util/text.h"

namespace aoecr {

/// Generator for one named stream under a master seed. Streams with different
/// keys are independent, so concurrent callers do not perturb each other.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::string_view key) {
  const std::uint64_t h = text::fnv1a(key);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

inline double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace aoecr
