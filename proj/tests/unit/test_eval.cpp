#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "aoecr/command/labels.h"
#include "aoecr/eval/harness.h"
#include "aoecr/eval/report.h"
#include "aoecr/forge/dataset.h"
#include "aoecr/llm/oracle.h"
#include "test_support.h"

using namespace aoecr;
using namespace aoecr::eval;

namespace {

forge::Dataset forged(std::size_t seeds, std::uint64_t seed = 1) {
  llm::OracleConfig cfg;
  cfg.seed = seed;
  llm::OracleBackend patient(cfg);
  cfg.seed = seed + 1;
  llm::OracleBackend nurse(cfg);
  auto r = forge::forge(forge::make_seeds(seeds, seed), patient, nurse, seed);
  EXPECT_TRUE(r.rejected.empty());
  return r.dataset;
}

const forge::Dataset& corpus() {
  static const auto d = forged(400);
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> numbers_in(const std::string& s) {
  static const std::regex num(R"(-?\d+\.\d+)");
  std::vector<double> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), num); it != std::sregex_iterator(); ++it) {
    out.push_back(std::stod(it->str()));
  }
  return out;
}

}  // namespace

TEST(Stage, NamesRoundTrip) {
  for (auto s : kAllStages) EXPECT_EQ(stage_from_string(to_string(s)), s);
  EXPECT_FALSE(stage_from_string("finetuned"));
}

TEST(Stage, OptionsAddOneMechanismEach) {
  const auto p = FaultProfile::reference();
  const auto po = stage_options(AblationStage::kPromptOnly, p);
  const auto full = stage_options(AblationStage::kFullWithCos, p);
  EXPECT_FALSE(po.classify || po.self_check || po.predict_time);
  EXPECT_TRUE(full.classify && full.self_check && full.predict_time);
  EXPECT_EQ(full.max_revisions, 2);
}

TEST(JudgeItem, ExactMatchAndClarify) {
  forge::DialoguePair p;
  p.canonical_command = command::serialize(*command::plan_from_label("lift_extend"));
  p.clarity = Clarity::kMedium;
  EXPECT_TRUE(judge_item(p, cos::Execute{*command::plan_from_label("lift_extend")}));
  EXPECT_FALSE(judge_item(p, cos::Execute{*command::plan_from_label("lift_retract")}));
  EXPECT_FALSE(judge_item(p, cos::Clarify{"which part?"}));
  EXPECT_FALSE(judge_item(p, cos::Refuse{"no"}));
  p.clarity = Clarity::kUnclear;
  EXPECT_TRUE(judge_item(p, cos::Clarify{"which part?"}));
}

TEST(Ablation, CalibrationIsPerfectEverywhere) {
  EvalConfig cfg;
  const auto reports = run_ablation(corpus(), cfg);
  ASSERT_EQ(reports.size(), 3u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.n, 1600u);
    EXPECT_EQ(r.correct, r.n) << to_string(r.stage);
    EXPECT_DOUBLE_EQ(r.total, 1.0);
    EXPECT_EQ(r.backend_failures, 0u);
    for (auto c : kAllClarities) EXPECT_EQ(r.at(c).n, 400u);
  }
}

TEST(Ablation, LimitingCase) {
  EvalConfig cfg;
  cfg.profile.detection = 1.0;
  cfg.profile.max_revisions = 6;
  for (auto s : kAllStages) cfg.profile.at(s).generation = {1.0, 1.0, 1.0, 1.0};
  const auto d = forged(40);
  EXPECT_DOUBLE_EQ(evaluate_commands(d, AblationStage::kFullWithCos, cfg).total, 1.0);
  EXPECT_DOUBLE_EQ(evaluate_commands(d, AblationStage::kPromptOnly, cfg).total, 0.0);
}

TEST(Ablation, ReferenceProfileMatchesClosedForm) {
  EvalConfig cfg;
  cfg.profile = FaultProfile::reference();
  const auto& p = cfg.profile;
  for (auto stage : kAllStages) {
    const auto r = evaluate_commands(corpus(), stage, cfg);
    const bool full = stage == AblationStage::kFullWithCos;
    double expected_total = 0.0;
    for (auto c : kAllClarities) {
      const double e = testkit::expected_accuracy(c, p.at(stage).generation[index(c)],
                                                  p.at(stage).revision[index(c)], p.detection,
                                                  p.max_revisions, full);
      expected_total += e / 4.0;
      const double n = static_cast<double>(r.at(c).n);
      const double tol = std::max(0.03, 4.0 * std::sqrt(e * (1.0 - e) / n));
      EXPECT_NEAR(r.at(c).accuracy(), e, tol) << to_string(stage) << " " << to_string(c);
    }
    EXPECT_NEAR(r.total, expected_total, 0.03) << to_string(stage);
    EXPECT_NEAR(r.total, recomputed_total(r), 1e-12);
  }
}

TEST(Ablation, ClosedFormReferenceValues) {
  const auto p = FaultProfile::reference();
  auto e = [&](AblationStage s, Clarity c) {
    return testkit::expected_accuracy(c, p.at(s).generation[index(c)], 0.0, p.detection,
                                      p.max_revisions, s == AblationStage::kFullWithCos);
  };
  EXPECT_NEAR(e(AblationStage::kPromptOnly, Clarity::kHigh), 0.75, 1e-12);
  EXPECT_NEAR(e(AblationStage::kPromptFinetunedProxy, Clarity::kMedium), 0.70, 1e-12);
  EXPECT_NEAR(e(AblationStage::kFullWithCos, Clarity::kHigh), 0.995, 1e-12);
  EXPECT_NEAR(e(AblationStage::kFullWithCos, Clarity::kUnclear), 0.93, 1e-12);
}

TEST(Ablation, MonotoneAcrossStages) {
  EvalConfig cfg;
  cfg.profile = FaultProfile::reference();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    cfg.seed = seed;
    const auto r = run_ablation(corpus(), cfg);
    EXPECT_LT(r[0].total, r[1].total) << seed;
    EXPECT_LT(r[1].total, r[2].total) << seed;
  }
}

TEST(Ablation, SameSeedSameReport) {
  EvalConfig cfg;
  cfg.profile = FaultProfile::reference();
  cfg.seed = 9;
  const auto d = forged(60);
  EvalConfig serial = cfg;
  serial.workers = 1;
  std::vector<ItemOutcome> a, b;
  const auto r1 = evaluate_commands(d, AblationStage::kFullWithCos, cfg, &a);
  const auto r2 = evaluate_commands(d, AblationStage::kFullWithCos, serial, &b);
  EXPECT_EQ(r1.correct, r2.correct);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].decision, b[i].decision);
    EXPECT_EQ(a[i].correct, b[i].correct);
  }
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end(),
                             [](const auto& x, const auto& y) { return x.id < y.id; }));
}

TEST(Ablation, EmptyDataset) {
  const auto r = evaluate_commands({}, AblationStage::kFullWithCos, EvalConfig{});
  EXPECT_EQ(r.n, 0u);
  EXPECT_DOUBLE_EQ(r.total, 0.0);
  EXPECT_DOUBLE_EQ(recomputed_total(r), 0.0);
}

TEST(FaultProfileJson, RoundTripAndErrors) {
  const auto p = FaultProfile::reference();
  auto back = fault_profile_from_json(fault_profile_to_json(p));
  ASSERT_TRUE(back) << back.error();
  EXPECT_EQ(fault_profile_to_json(*back), fault_profile_to_json(p));
  EXPECT_FALSE(fault_profile_from_json(nlohmann::json::parse(R"({"detection":2})")));
  auto bad = fault_profile_from_json(
      nlohmann::json::parse(R"({"stages":{"full_with_cos":{"generation":{"vague":0.1}}}})"));
  ASSERT_FALSE(bad);
  EXPECT_NE(bad.error().find("vague"), std::string::npos);
}

TEST(FaultProfileJson, ConfigFileIsReference) {
  auto p = load_fault_profile(std::string(AOECR_GOLDEN_DIR) + "/../../configs/fault_profile.json");
  ASSERT_TRUE(p) << p.error();
  EXPECT_EQ(fault_profile_to_json(*p), fault_profile_to_json(FaultProfile::reference()));
}

TEST(CompareScores, PinnedTransforms) {
  std::vector<expert::MetricVector> base(10, expert::MetricVector::constant(3.0));
  auto plus = base;
  for (auto& v : plus) v[expert::Metric::kEmpathy] += 1.0;
  const auto r = compare_scores("a", "b", base, plus);
  EXPECT_EQ(r.items, 10u);
  EXPECT_DOUBLE_EQ(r.at(expert::Metric::kEmpathy).improved_pct, 100.0);
  EXPECT_DOUBLE_EQ(r.at(expert::Metric::kEmpathy).candidate_mean, 4.0);
  EXPECT_DOUBLE_EQ(r.at(expert::Metric::kSafety).unchanged_pct, 100.0);

  const auto same = compare_scores("a", "a", base, base);
  for (auto m : expert::kAllMetrics) {
    EXPECT_DOUBLE_EQ(same.at(m).unchanged_pct, 100.0);
    EXPECT_DOUBLE_EQ(same.at(m).baseline_mean, same.at(m).candidate_mean);
  }
}

TEST(Responses, OraclePanel) {
  forge::Dataset sample(corpus().begin(), corpus().begin() + 20);
  llm::OracleConfig cfg;
  cfg.seed = 3;
  llm::OracleBackend expert(cfg);
  std::vector<llm::BackendPtr> panel;
  for (std::uint64_t i = 0; i < 3; ++i) {
    llm::OracleConfig j;
    j.seed = 100 + i;
    panel.push_back(std::make_shared<llm::OracleBackend>(j));
  }
  auto r = evaluate_responses(sample, expert, panel, 1);
  ASSERT_TRUE(r) << r.error();
  ASSERT_EQ(r->reports.size(), 3u);
  EXPECT_TRUE(r->excluded.empty());
  const auto& def = r->reports[0];
  EXPECT_EQ(def.baseline, "tentative");
  EXPECT_EQ(def.items, 20u);
  EXPECT_GT(def.at(expert::Metric::kEmpathy).candidate_mean,
            def.at(expert::Metric::kEmpathy).baseline_mean);
  const auto& concise = r->reports[1];
  EXPECT_EQ(concise.candidate, "conciseness");
  EXPECT_GE(concise.at(expert::Metric::kConciseness).candidate_mean,
            concise.at(expert::Metric::kConciseness).baseline_mean);

  EXPECT_FALSE(evaluate_responses(sample, expert, {}, 1));
}

TEST(Report, GoldenJson) {
  EvalConfig cfg;
  EvalReports reports{run_ablation(forged(8), cfg), std::nullopt};
  testkit::TempDir dir("eval");
  auto path = emit_report(reports, ReportFormat::kJson, dir.path());
  ASSERT_TRUE(path) << path.error();
  const auto golden = std::filesystem::path(AOECR_GOLDEN_DIR) / "report_calibration.json";
  if (std::getenv("AOECR_UPDATE_GOLDEN")) std::filesystem::copy_file(*path, golden,
      std::filesystem::copy_options::overwrite_existing);
  EXPECT_EQ(slurp(*path), slurp(golden));
}

TEST(Report, FormatsAgree) {
  EvalConfig cfg;
  cfg.profile = FaultProfile::reference();
  EvalReports reports{run_ablation(forged(20), cfg), std::nullopt};
  const auto j = report_to_json(reports);
  EXPECT_EQ(nlohmann::ordered_json::parse(j.dump()), j);

  // Every table cell in markdown equals the JSON value.
  const auto md = report_to_markdown(reports);
  std::vector<double> from_json;
  for (const auto& s : j["ablation"]) {
    for (auto c : kAllClarities) from_json.push_back(s["by_clarity"][std::string(to_string(c))]["accuracy_pct"]);
    from_json.push_back(s["total_pct"]);
  }
  for (const auto& ref : j["published_reference"]["values"]) from_json.push_back(ref["percent"]);
  const auto from_md = numbers_in(md);
  ASSERT_EQ(from_md.size(), from_json.size());
  for (std::size_t i = 0; i < from_md.size(); ++i) EXPECT_DOUBLE_EQ(from_md[i], from_json[i]) << i;
}

TEST(Report, PublishedReferenceValues) {
  const auto& refs = published_references();
  ASSERT_EQ(refs.size(), 3u);
  EXPECT_DOUBLE_EQ(refs[0].percent, 62.41);
  EXPECT_DOUBLE_EQ(refs[1].percent, 98.72);
  EXPECT_DOUBLE_EQ(refs[2].percent, 90.18);
}
