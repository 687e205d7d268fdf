#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aoecr/eval/harness.h"
#include "aoecr/util/expected.h"

namespace aoecr::eval {

struct EvalReports {
  std::vector<AccuracyReport> ablation;
  std::optional<ResponseEvaluation> responses;
};

enum class ReportFormat { kJson, kMarkdown };

// Published accuracy values for a fine-tuned model that is not available
// offline. Printed for orientation only.
struct PublishedReference {
  AblationStage stage;
  std::string column;  // "total" or a clarity name
  double percent;
};
const std::vector<PublishedReference>& published_references();
inline constexpr const char* kReferenceNote = "Published reference (not reproducible offline)";

/// Percentages carry two decimals and means three, identically in both formats.
nlohmann::ordered_json report_to_json(const EvalReports& reports);
std::string report_to_markdown(const EvalReports& reports);

/// Writes report.json or report.md into `dir` and returns the path.
Expected<std::filesystem::path, std::string> emit_report(const EvalReports& reports,
                                                         ReportFormat format,
                                                         const std::filesystem::path& dir);

}  // namespace aoecr::eval
