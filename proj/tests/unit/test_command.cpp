#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "aoecr/command/command.h"
#include "aoecr/command/degree.h"
#include "aoecr/command/labels.h"
#include "aoecr/command/schema.h"
#include "test_support.h"

using namespace aoecr;
using namespace aoecr::command;
using bed::BedAction;
using bed::Direction;
using bed::Mechanism;

TEST(BedAction, EightDistinctActions) {
  const auto all = bed::all_actions();
  std::set<std::string> names;
  for (const auto& a : all) names.insert(bed::action_name(a));
  EXPECT_EQ(all.size(), 8u);
  EXPECT_EQ(names.size(), 8u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(all[i].index(), i);
    EXPECT_EQ(BedAction::from_index(i), all[i]);
    EXPECT_EQ(bed::action_from_name(bed::action_name(all[i])), all[i]);
  }
  EXPECT_EQ(bed::action_name({Mechanism::kBackrest, Direction::kExtend}), "backrest_extend");
  EXPECT_EQ(bed::action_name({Mechanism::kRightLeg, Direction::kRetract}), "right_leg_retract");
  EXPECT_FALSE(bed::action_from_name("backrest_up"));
}

TEST(ParsePlan, CanonicalSingle) {
  auto p = parse_plan(R"({"kind":"single","steps":[{"action":"backrest_extend","extent":1.0}]})");
  ASSERT_TRUE(p) << p.error().message();
  EXPECT_EQ(*p, CommandPlan::single({{Mechanism::kBackrest, Direction::kExtend}, 1.0, 1.0}));
}

TEST(ParsePlan, ZeroRepetitionsRejectedAtRepetitions) {
  auto p = parse_plan(
      R"({"kind":"loop","steps":[{"action":"left_leg_extend","extent":0.5}],"repetitions":0})");
  ASSERT_FALSE(p);
  EXPECT_EQ(p.error().path, "repetitions");
}

TEST(ParsePlan, StrictErrorsNameTheField) {
  struct Case {
    const char* text;
    const char* path;
  };
  const Case cases[] = {
      {R"(not json)", "$"},
      {R"([1,2])", "$"},
      {R"({"kind":"single","steps":[],"extra":1})", "extra"},
      {R"({"steps":[]})", "kind"},
      {R"({"kind":"wiggle","steps":[]})", "kind"},
      {R"({"kind":"single"})", "steps"},
      {R"({"kind":"single","steps":[{"action":"lift_extend","extent":1,"color":"red"}]})",
       "steps[0].color"},
      {R"({"kind":"single","steps":[{"action":"lift_up","extent":1}]})", "steps[0].action"},
      {R"({"kind":"single","steps":[{"action":"lift_extend"}]})", "steps[0].extent"},
      {R"({"kind":"single","steps":[{"action":"lift_extend","extent":0}]})", "steps[0].extent"},
      {R"({"kind":"single","steps":[{"action":"lift_extend","extent":1.5}]})", "steps[0].extent"},
      {R"({"kind":"single","steps":[{"action":"lift_extend","extent":1,"speed_scale":0}]})",
       "steps[0].speed_scale"},
      {R"({"kind":"sequence","steps":[{"action":"lift_extend","extent":1}]})", "steps"},
      {R"({"kind":"stop","steps":[{"action":"lift_extend","extent":1}]})", "steps"},
      {R"({"kind":"single","steps":[{"action":"lift_extend","extent":1}],"repetitions":2})",
       "repetitions"},
      {R"({"kind":"loop","steps":[{"action":"lift_extend","extent":1}]})", "repetitions"},
      {R"({"kind":"loop","steps":[{"action":"lift_extend","extent":1}],"repetitions":1.5})",
       "repetitions"},
  };
  for (const auto& c : cases) {
    auto p = parse_plan(c.text);
    ASSERT_FALSE(p) << c.text;
    EXPECT_EQ(p.error().path, c.path) << c.text << " -> " << p.error().message();
  }
}

TEST(ParsePlan, RoundTripGeneratedPlans) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto plan = testkit::random_plan(rng);
    const auto text = serialize(plan);
    auto back = parse_plan(text);
    ASSERT_TRUE(back) << text << ": " << back.error().message();
    EXPECT_EQ(*back, plan) << text;
    EXPECT_EQ(serialize(*back), text);
  }
  auto stop = parse_plan(serialize(CommandPlan::stop()));
  ASSERT_TRUE(stop);
  EXPECT_EQ(*stop, CommandPlan::stop());
}

TEST(Serialize, EqualityIffIdenticalBytes) {
  std::mt19937_64 rng(11);
  std::vector<CommandPlan> plans;
  for (int i = 0; i < 200; ++i) plans.push_back(testkit::random_plan(rng));
  plans.push_back(plans[3]);
  plans.push_back(plans[17]);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    for (std::size_t j = 0; j < plans.size(); ++j) {
      EXPECT_EQ(plans[i] == plans[j], serialize(plans[i]) == serialize(plans[j]));
    }
  }
}

TEST(Serialize, FixedKeyOrder) {
  const auto plan = CommandPlan::loop({{{Mechanism::kLift, Direction::kExtend}, 0.5, 1.0}}, 3);
  EXPECT_EQ(serialize(plan),
            R"({"kind":"loop","steps":[{"action":"lift_extend","extent":0.5,"speed_scale":1.0}],)"
            R"("repetitions":3})");
}

TEST(ValidatePlan, ValidSingleIsOk) {
  EXPECT_TRUE(validate_plan(CommandPlan::single({{Mechanism::kLift, Direction::kExtend}})).empty());
}

TEST(ValidatePlan, RepetitionCap) {
  const auto plan = CommandPlan::loop({{{Mechanism::kLift, Direction::kExtend}, 0.5, 1.0}}, 999);
  const auto v = validate_plan(plan);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].path, "repetitions");
  EXPECT_NE(v[0].reason.find("repetitions exceeds cap"), std::string::npos);
}

TEST(ValidatePlan, StepCountCap) {
  std::vector<CommandStep> steps(25, CommandStep{{Mechanism::kLift, Direction::kExtend}, 0.1, 1.0});
  const auto v = validate_plan(CommandPlan::sequence(steps));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].path, "steps");
  EXPECT_NE(v[0].reason.find("25"), std::string::npos);
}

TEST(ValidatePlan, ReportsEveryViolation) {
  Capabilities caps;
  caps.actions = {BedAction{Mechanism::kLift, Direction::kExtend}};
  std::vector<CommandStep> steps(13, CommandStep{{Mechanism::kBackrest, Direction::kExtend}, 0.1, 1.0});
  steps[0].extent = 0.0;
  auto plan = CommandPlan::loop(steps, 11);
  const auto v = validate_plan(plan, caps);
  // repetitions, step count, 13 unsupported actions, one bad extent
  EXPECT_EQ(v.size(), 16u);
}

TEST(ValidatePlan, PureAndTotal) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    auto plan = testkit::random_plan(rng);
    plan.repetitions = std::uniform_int_distribution<int>(-5, 50)(rng);
    plan.kind = static_cast<PlanKind>(std::uniform_int_distribution<int>(0, 3)(rng));
    EXPECT_EQ(validate_plan(plan).size(), validate_plan(plan).size());
  }
}

TEST(Degree, DefaultTable) {
  const auto t = DegreeTable::defaults();
  EXPECT_DOUBLE_EQ(t.fraction_for("slightly"), 0.25);
  EXPECT_DOUBLE_EQ(t.fraction_for("a_bit"), 0.40);
  EXPECT_DOUBLE_EQ(t.fraction_for("halfway"), 0.50);
  EXPECT_DOUBLE_EQ(t.fraction_for("mostly"), 0.75);
  EXPECT_DOUBLE_EQ(t.fraction_for("fully"), 1.00);
  EXPECT_DOUBLE_EQ(t.fraction_for("enormously"), 1.0);
}

TEST(Degree, MatchesWholeWordsCaseInsensitive) {
  const auto t = DegreeTable::defaults();
  auto m = t.match("Lift the bed A BIT please");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->key, "a_bit");
  EXPECT_EQ(t.match("raise the backrest slightly")->key, "slightly");
  EXPECT_FALSE(t.match("raise the backrest"));
  EXPECT_FALSE(t.match("a bitter taste"));
  EXPECT_EQ(t.match("slightly, then fully")->key, "slightly");
}

TEST(Degree, Override) {
  auto t = DegreeTable::defaults();
  t.set_fraction("slightly", 0.1);
  EXPECT_DOUBLE_EQ(t.fraction_for("slightly"), 0.1);
}

TEST(Labels, PlanFromLabel) {
  auto p = plan_from_label("backrest_extend");
  ASSERT_TRUE(p);
  EXPECT_EQ(*p, CommandPlan::single({{Mechanism::kBackrest, Direction::kExtend}, 1.0, 1.0}));

  auto slight = plan_from_label("backrest_extend", DegreeTable::defaults().match("slightly"));
  ASSERT_TRUE(slight);
  EXPECT_DOUBLE_EQ(slight->steps[0].extent, 0.25);

  auto unknown = plan_from_label("somersault");
  ASSERT_FALSE(unknown);
  EXPECT_EQ(unknown.error().label, "somersault");
}

TEST(Labels, EveryVocabularyLabelValidates) {
  const auto& vocab = label_vocabulary();
  EXPECT_EQ(single_action_labels().size(), 8u);
  EXPECT_GT(vocab.size(), 8u);
  const auto degrees = DegreeTable::defaults();
  for (const auto& label : vocab) {
    EXPECT_TRUE(is_known_label(label));
    auto p = plan_from_label(label);
    ASSERT_TRUE(p) << label;
    EXPECT_TRUE(validate_plan(*p).empty()) << label;
    for (const auto& d : degrees.entries()) {
      auto scaled = plan_from_label(label, d);
      ASSERT_TRUE(scaled);
      EXPECT_TRUE(validate_plan(*scaled).empty()) << label << " " << d.key;
    }
  }
}

TEST(Schema, EmbeddedSchemaMatchesDocsFile) {
  std::ifstream in(std::string(AOECR_GOLDEN_DIR) + "/../../docs/command_schema.json");
  ASSERT_TRUE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(command_schema_json(), ss.str());
  auto doc = nlohmann::json::parse(command_schema_json());
  EXPECT_TRUE(doc.is_object());
}
