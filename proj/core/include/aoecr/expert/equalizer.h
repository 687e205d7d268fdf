#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace aoecr::expert {

// Nursing-service metrics, in their fixed order.
enum class Metric : std::uint8_t {
  kConciseness = 0,
  kAppropriateness,
  kClarity,
  kEmpathy,
  kEncouragement,
  kExplanation,
  kSafety,
  kUnderstanding,
};

inline constexpr std::size_t kMetricCount = 8;
inline constexpr std::array<Metric, kMetricCount> kAllMetrics{
    Metric::kConciseness, Metric::kAppropriateness, Metric::kClarity,     Metric::kEmpathy,
    Metric::kEncouragement, Metric::kExplanation,   Metric::kSafety,      Metric::kUnderstanding};

std::string_view to_string(Metric m);
std::optional<Metric> metric_from_string(std::string_view s);

/// Weights on the probability simplex, one per metric.
struct EqualizerWeights {
  std::array<double, kMetricCount> w{};

  static EqualizerWeights uniform();

  double operator[](Metric m) const { return w[static_cast<std::size_t>(m)]; }
  double& operator[](Metric m) { return w[static_cast<std::size_t>(m)]; }

  bool on_simplex(double tol = 1e-9) const;

  friend bool operator==(const EqualizerWeights&, const EqualizerWeights&) = default;
};

/// One 1..5 score per metric.
struct MetricVector {
  std::array<double, kMetricCount> s{};

  static MetricVector constant(double v);

  double operator[](Metric m) const { return s[static_cast<std::size_t>(m)]; }
  double& operator[](Metric m) { return s[static_cast<std::size_t>(m)]; }

  bool valid() const;

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

inline constexpr double kDefaultFeedbackRate = 0.2;

/// w_m <- w_m * exp(rate * (3 - score_m) / 2), renormalized. Metrics scored
/// below 3 gain weight; a feedback of all 3s leaves the weights unchanged.
/// Requires 0 < rate <= 1 and a valid feedback vector.
EqualizerWeights update_equalizer(const EqualizerWeights& weights, const MetricVector& feedback,
                                  double rate = kDefaultFeedbackRate);

/// default (uniform), conciseness (0.40, rest uniform), safety_encouragement
/// (0.25 each, rest uniform), in that order.
const std::vector<std::pair<std::string, EqualizerWeights>>& equalizer_presets();
std::optional<EqualizerWeights> preset(std::string_view name);

enum class Band { kDominant, kRaised, kNeutral, kDeemphasized };

std::string_view to_string(Band b);

/// >2x uniform: dominant; >1.25x: raised; >=0.75x: neutral; else de-emphasized.
Band band_for(double weight);

nlohmann::json weights_to_json(const EqualizerWeights& w);
std::optional<EqualizerWeights> weights_from_json(const nlohmann::json& j);
nlohmann::json scores_to_json(const MetricVector& v);
std::optional<MetricVector> scores_from_json(const nlohmann::json& j);

}  // namespace aoecr::expert
