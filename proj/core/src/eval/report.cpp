#include "aoecr/eval/report.h"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace aoecr::eval {

const std::vector<PublishedReference>& published_references() {
  static const std::vector<PublishedReference> refs{
      {AblationStage::kPromptOnly, "total", 62.41},
      {AblationStage::kPromptFinetunedProxy, "high", 98.72},
      {AblationStage::kFullWithCos, "total", 90.18},
  };
  return refs;
}

namespace {

double rounded(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(x * scale) / scale;
}

double pct(double fraction) { return rounded(100.0 * fraction, 2); }

std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, rounded(x, decimals));
  return buf;
}

std::string cell_text(std::size_t n, double percent) { return n == 0 ? "-" : fixed(percent, 2); }

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReports& reports) {
  using oj = nlohmann::ordered_json;
  oj root = oj::object();
  oj ablation = oj::array();
  for (const auto& r : reports.ablation) {
    oj s;
    s["stage"] = std::string(to_string(r.stage));
    s["n"] = r.n;
    s["correct"] = r.correct;
    s["clarified"] = r.clarified;
    s["refused"] = r.refused;
    s["backend_failures"] = r.backend_failures;
    s["total_pct"] = pct(r.total);
    oj by = oj::object();
    for (auto c : kAllClarities) {
      const auto& cell = r.at(c);
      by[std::string(to_string(c))] = {
          {"n", cell.n}, {"correct", cell.correct}, {"accuracy_pct", pct(cell.accuracy())}};
    }
    s["by_clarity"] = std::move(by);
    ablation.push_back(std::move(s));
  }
  root["ablation"] = std::move(ablation);

  oj refs = oj::array();
  for (const auto& ref : published_references()) {
    refs.push_back({{"stage", std::string(to_string(ref.stage))},
                    {"column", ref.column},
                    {"percent", ref.percent}});
  }
  root["published_reference"] = {{"note", kReferenceNote}, {"values", std::move(refs)}};

  if (reports.responses) {
    oj list = oj::array();
    for (const auto& rr : reports.responses->reports) {
      oj entry;
      entry["baseline"] = rr.baseline;
      entry["candidate"] = rr.candidate;
      entry["items"] = rr.items;
      oj metrics = oj::object();
      for (auto m : expert::kAllMetrics) {
        const auto& mc = rr.at(m);
        oj scores_b = oj::array();
        oj scores_c = oj::array();
        for (double v : mc.baseline_scores) scores_b.push_back(rounded(v, 3));
        for (double v : mc.candidate_scores) scores_c.push_back(rounded(v, 3));
        metrics[std::string(expert::to_string(m))] = {
            {"baseline_mean", rounded(mc.baseline_mean, 3)},
            {"candidate_mean", rounded(mc.candidate_mean, 3)},
            {"improved_pct", rounded(mc.improved_pct, 2)},
            {"unchanged_pct", rounded(mc.unchanged_pct, 2)},
            {"regressed_pct", rounded(mc.regressed_pct, 2)},
            {"baseline_scores", std::move(scores_b)},
            {"candidate_scores", std::move(scores_c)}};
      }
      entry["metrics"] = std::move(metrics);
      list.push_back(std::move(entry));
    }
    root["responses"] = {{"comparisons", std::move(list)},
                         {"excluded", reports.responses->excluded}};
  }
  return root;
}

std::string report_to_markdown(const EvalReports& reports) {
  std::string out = "# Evaluation report\n\n## Command accuracy (%)\n\n";
  out += "| Stage | high | medium | low | unclear | total | n |\n";
  out += "|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : reports.ablation) {
    out += "| " + std::string(to_string(r.stage));
    for (auto c : kAllClarities) out += " | " + cell_text(r.at(c).n, pct(r.at(c).accuracy()));
    out += " | " + cell_text(r.n, pct(r.total)) + " | " + std::to_string(r.n) + " |\n";
  }

  out += "\n" + std::string(kReferenceNote) + ":\n\n";
  out += "| Stage | Column | Accuracy (%) |\n|---|---|---:|\n";
  for (const auto& ref : published_references()) {
    out += "| " + std::string(to_string(ref.stage)) + " | " + ref.column + " | " +
           fixed(ref.percent, 2) + " |\n";
  }

  if (reports.responses) {
    out += "\n## Response scores\n";
    for (const auto& rr : reports.responses->reports) {
      out += "\n### " + rr.baseline + " vs " + rr.candidate + " (" + std::to_string(rr.items) +
             " items)\n\n";
      out += "| Metric | " + rr.baseline + " mean | " + rr.candidate +
             " mean | improved % | unchanged % | regressed % |\n";
      out += "|---|---:|---:|---:|---:|---:|\n";
      for (auto m : expert::kAllMetrics) {
        const auto& mc = rr.at(m);
        out += "| " + std::string(expert::to_string(m)) + " | " + fixed(mc.baseline_mean, 3) +
               " | " + fixed(mc.candidate_mean, 3) + " | " + fixed(mc.improved_pct, 2) + " | " +
               fixed(mc.unchanged_pct, 2) + " | " + fixed(mc.regressed_pct, 2) + " |\n";
      }
    }
    if (!reports.responses->excluded.empty()) {
      out += "\nExcluded items:";
      for (const auto& id : reports.responses->excluded) out += " " + id;
      out += "\n";
    }
  }
  return out;
}

Expected<std::filesystem::path, std::string> emit_report(const EvalReports& reports,
                                                         ReportFormat format,
                                                         const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return unexpected("cannot create " + dir.string() + ": " + ec.message());
  const auto path = dir / (format == ReportFormat::kJson ? "report.json" : "report.md");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return unexpected("cannot write " + path.string());
  if (format == ReportFormat::kJson) {
    out << report_to_json(reports).dump(2) << '\n';
  } else {
    out << report_to_markdown(reports);
  }
  if (!out) return unexpected("write failed for " + path.string());
  return path;
}

}  // namespace aoecr::eval
