#include "aoecr/expert/equalizer.h"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace aoecr::expert {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kConciseness:
      return "conciseness";
    case Metric::kAppropriateness:
      return "appropriateness";
    case Metric::kClarity:
      return "clarity";
    case Metric::kEmpathy:
      return "empathy";
    case Metric::kEncouragement:
      return "encouragement";
    case Metric::kExplanation:
      return "explanation";
    case Metric::kSafety:
      return "safety";
    case Metric::kUnderstanding:
      return "understanding";
  }
  return "unknown";
}

std::optional<Metric> metric_from_string(std::string_view s) {
  for (auto m : kAllMetrics) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

EqualizerWeights EqualizerWeights::uniform() {
  EqualizerWeights out;
  out.w.fill(1.0 / kMetricCount);
  return out;
}

bool EqualizerWeights::on_simplex(double tol) const {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) < tol;
}

MetricVector MetricVector::constant(double v) {
  MetricVector out;
  out.s.fill(v);
  return out;
}

bool MetricVector::valid() const {
  for (double x : s) {
    if (!(x >= 1.0 && x <= 5.0)) return false;
  }
  return true;
}

EqualizerWeights update_equalizer(const EqualizerWeights& weights, const MetricVector& feedback,
                                  double rate) {
  EqualizerWeights out = weights;
  double sum = 0.0;
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    out.w[i] = weights.w[i] * std::exp(rate * (3.0 - feedback.s[i]) / 2.0);
    sum += out.w[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) return weights;
  for (auto& x : out.w) x /= sum;
  return out;
}

namespace {

EqualizerWeights with_fixed(std::initializer_list<std::pair<Metric, double>> fixed) {
  double taken = 0.0;
  for (const auto& [m, v] : fixed) taken += v;
  const double rest = (1.0 - taken) / static_cast<double>(kMetricCount - fixed.size());
  EqualizerWeights out;
  out.w.fill(rest);
  for (const auto& [m, v] : fixed) out[m] = v;
  return out;
}

}  // namespace

const std::vector<std::pair<std::string, EqualizerWeights>>& equalizer_presets() {
  static const std::vector<std::pair<std::string, EqualizerWeights>> presets{
      {"default", EqualizerWeights::uniform()},
      {"conciseness", with_fixed({{Metric::kConciseness, 0.40}})},
      {"safety_encouragement",
       with_fixed({{Metric::kSafety, 0.25}, {Metric::kEncouragement, 0.25}})},
  };
  return presets;
}

std::optional<EqualizerWeights> preset(std::string_view name) {
  for (const auto& [n, w] : equalizer_presets()) {
    if (n == name) return w;
  }
  return std::nullopt;
}

std::string_view to_string(Band b) {
  switch (b) {
    case Band::kDominant:
      return "dominant";
    case Band::kRaised:
      return "raised";
    case Band::kNeutral:
      return "neutral";
    case Band::kDeemphasized:
      return "de-emphasized";
  }
  return "neutral";
}

Band band_for(double weight) {
  constexpr double u = 1.0 / kMetricCount;
  if (weight > 2.0 * u) return Band::kDominant;
  if (weight > 1.25 * u) return Band::kRaised;
  if (weight >= 0.75 * u) return Band::kNeutral;
  return Band::kDeemphasized;
}

nlohmann::json weights_to_json(const EqualizerWeights& w) {
  nlohmann::json j = nlohmann::json::object();
  for (auto m : kAllMetrics) j[std::string(to_string(m))] = w[m];
  return j;
}

std::optional<EqualizerWeights> weights_from_json(const nlohmann::json& j) {
  if (!j.is_object()) return std::nullopt;
  EqualizerWeights out;
  for (auto m : kAllMetrics) {
    const auto key = std::string(to_string(m));
    if (!j.contains(key) || !j[key].is_number()) return std::nullopt;
    out[m] = j[key].get<double>();
  }
  return out;
}

nlohmann::json scores_to_json(const MetricVector& v) {
  nlohmann::json j = nlohmann::json::object();
  for (auto m : kAllMetrics) j[std::string(to_string(m))] = v[m];
  return j;
}

std::optional<MetricVector> scores_from_json(const nlohmann::json& j) {
  if (!j.is_object()) return std::nullopt;
  MetricVector out;
  for (auto m : kAllMetrics) {
    const auto key = std::string(to_string(m));
    if (!j.contains(key) || !j[key].is_number()) return std::nullopt;
    out[m] = j[key].get<double>();
  }
  if (!out.valid()) return std::nullopt;
  return out;
}

}  // namespace aoecr::expert
