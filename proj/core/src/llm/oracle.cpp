#include "aoecr/llm/oracle.h"

#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "aoecr/command/labels.h"
#include "aoecr/llm/sections.h"
#include "aoecr/llm/task.h"
#include "aoecr/util/rng.h"
#include "aoecr/util/text.h"

namespace aoecr::llm {

using bed::BedAction;
using bed::Direction;
using bed::Mechanism;
using command::CommandPlan;
using command::CommandStep;
using command::PlanKind;

void OracleTruth::add(std::string request_id, TruthEntry entry) {
  entries_.insert_or_assign(std::move(request_id), std::move(entry));
}

const TruthEntry* OracleTruth::find(const std::string& request_id) const {
  auto it = entries_.find(request_id);
  return it == entries_.end() ? nullptr : &it->second;
}

bool OracleConfig::valid() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  for (auto c : kAllClarities) {
    if (!prob(corruption[index(c)]) || !prob(revision_corruption[index(c)])) return false;
  }
  return prob(detection) && prob(judge_noise);
}

namespace {

bool has_any(const std::vector<std::string>& words, std::initializer_list<std::string_view> keys) {
  return std::any_of(words.begin(), words.end(), [&](const std::string& w) {
    return std::find(keys.begin(), keys.end(), w) != keys.end();
  });
}

std::optional<Direction> infer_direction(const std::vector<std::string>& w) {
  const bool down = has_any(w, {"lower", "down", "flat", "decrease", "retract", "drop", "reduce",
                                "recline", "lie"});
  const bool up = has_any(w, {"raise", "up", "higher", "lift", "sit", "elevate", "increase",
                              "extend", "upright"});
  if (down && !up) return Direction::kRetract;
  if (up && !down) return Direction::kExtend;
  if (up && down) {
    // "put ... down", "lower ... up" are rare; the later cue wins.
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      if (*it == "down" || *it == "lower" || *it == "flat") return Direction::kRetract;
      if (*it == "up" || *it == "raise" || *it == "higher") return Direction::kExtend;
    }
  }
  return std::nullopt;
}

std::vector<CommandStep> infer_steps(const std::vector<std::string>& w) {
  const auto dir = infer_direction(w);
  if (!dir) return {};
  auto step = [&](Mechanism m) { return CommandStep{BedAction{m, *dir}, 1.0, 1.0}; };
  const bool leg = has_any(w, {"leg", "legs", "knee", "knees", "foot", "feet"});
  const bool left = has_any(w, {"left"});
  const bool right = has_any(w, {"right"});
  if (leg) {
    if (left && !right) return {step(Mechanism::kLeftLeg)};
    if (right && !left) return {step(Mechanism::kRightLeg)};
    return {step(Mechanism::kLeftLeg), step(Mechanism::kRightLeg)};
  }
  if (has_any(w, {"backrest", "back", "sit", "sitting", "upright", "head", "recline"})) {
    return {step(Mechanism::kBackrest)};
  }
  if (has_any(w, {"bed", "height", "whole", "lift"})) return {step(Mechanism::kLift)};
  return {};
}

std::string_view describe_verb(Direction d) { return d == Direction::kExtend ? "raising" : "lowering"; }

std::string_view describe_noun(Mechanism m) {
  switch (m) {
    case Mechanism::kLift:
      return "the bed";
    case Mechanism::kBackrest:
      return "the backrest";
    case Mechanism::kLeftLeg:
      return "your left leg section";
    case Mechanism::kRightLeg:
      return "your right leg section";
  }
  return "the bed";
}

std::string nurse_response_for(const CommandPlan& plan) {
  if (plan.kind == PlanKind::kSingle) {
    const auto& a = plan.steps.front().action;
    return "Of course, I'm " + std::string(describe_verb(a.direction)) + " " +
           std::string(describe_noun(a.mechanism)) + " for you now.";
  }
  if (plan.kind == PlanKind::kLoop) {
    return "Of course, I'll run that movement a few times for you now.";
  }
  return "Of course, I'll make those adjustments one after another for you now.";
}

std::string class_name(const CommandPlan& plan) {
  switch (plan.kind) {
    case PlanKind::kSingle:
      return "single_action";
    case PlanKind::kSequence:
      return "action_sequence";
    case PlanKind::kLoop:
      return "loop_action";
    case PlanKind::kStop:
      return "single_action";
  }
  return "unclear";
}

constexpr std::string_view kClarifyQuestion =
    "I want to get this right for you. Which part of the bed would you like me to move, "
    "and should it go up or down?";

// Phrases the oracle expert adds and the oracle judge rewards.
constexpr std::string_view kEmpathy = "I understand how uncomfortable this can be.";
constexpr std::string_view kExplanation =
    "This should ease the pressure and help you feel more comfortable.";
constexpr std::string_view kSafety = "Please keep your arms inside the rails while the bed moves.";
constexpr std::string_view kEncouragement = "You're doing really well.";

struct PatientPhrases {
  std::string_view label;
  std::array<std::string_view, 3> phrases;
};

constexpr std::array<PatientPhrases, 14> kPatientPhrases{{
    {"lift_extend", {"raise the whole bed higher", "lift the bed up", "raise the bed height"}},
    {"lift_retract", {"lower the whole bed", "bring the bed down", "lower the bed height"}},
    {"backrest_extend",
     {"raise the backrest so I can sit up", "help me sit up by raising the back of the bed",
      "bring the backrest up so I can sit up"}},
    {"backrest_retract",
     {"lower the backrest so I can lie down", "put the back of the bed down so I can lie down",
      "bring the backrest down so I can rest"}},
    {"left_leg_extend",
     {"raise my left leg rest", "lift the left leg section", "bring my left leg up"}},
    {"left_leg_retract",
     {"lower my left leg rest", "put the left leg section down", "bring my left leg down"}},
    {"right_leg_extend",
     {"raise my right leg rest", "lift the right leg section", "bring my right leg up"}},
    {"right_leg_retract",
     {"lower my right leg rest", "put the right leg section down", "bring my right leg down"}},
    {"legs_raise", {"raise both of my legs", "lift both leg sections", "bring both legs up"}},
    {"legs_lower", {"lower both of my legs", "put both leg sections down", "bring both legs down"}},
    {"sit_up_high",
     {"raise the bed and then bring the backrest up", "lift the bed and then help me sit up",
      "raise the bed height and then raise the backrest"}},
    {"lie_flat",
     {"lay the backrest and both leg sections flat", "put the backrest and my legs down flat",
      "lower the backrest and then both leg sections"}},
    {"leg_exercise",
     {"move my legs up and down for some exercise", "exercise my legs by raising and lowering them",
      "give my legs some exercise"}},
    {"back_rocking",
     {"rock the backrest up and down gently", "move the backrest up and down to ease my back",
      "rock my back up and down"}},
}};

struct ReasonPrefix {
  std::string_view reason;
  std::array<std::pair<std::string_view, std::string_view>, 3> forms;  // prefix, terminator
};

constexpr std::array<ReasonPrefix, 3> kReasonPrefixes{{
    {"direct_adjustment",
     {{{"Please", "."}, {"Could you", "?"}, {"Nurse, can you", "?"}}}},
    {"physical_discomfort",
     {{{"My back is aching, could you", "?"},
       {"My legs feel numb, please", "."},
       {"I am sore from lying like this, can you", "?"}}}},
    {"psychological_sensation",
     {{{"I feel anxious lying like this, could you", "?"},
       {"I am feeling restless, please", "."},
       {"I feel uneasy and cramped, can you", "?"}}}},
}};

std::string patient_request(std::string_view label, std::string_view reason,
                            std::mt19937_64& rng) {
  const PatientPhrases* phrases = nullptr;
  for (const auto& p : kPatientPhrases) {
    if (p.label == label) phrases = &p;
  }
  const ReasonPrefix* prefix = &kReasonPrefixes[0];
  for (const auto& r : kReasonPrefixes) {
    if (r.reason == reason) prefix = &r;
  }
  std::uniform_int_distribution<std::size_t> pick(0, 2);
  const auto& [lead, end] = prefix->forms[pick(rng)];
  std::string phrase = phrases ? std::string(phrases->phrases[pick(rng)]) : "adjust the bed";
  return std::string(lead) + " " + phrase + std::string(end);
}

std::string emit_plan(const CommandPlan& plan) {
  return render_section(SectionTag::kCommand, command::serialize(plan)) + "\n" +
         render_section(SectionTag::kResponse, nurse_response_for(plan));
}

std::map<std::string, std::string> parse_bands(std::string_view s) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string_view::npos) comma = s.size();
    const auto item = s.substr(pos, comma - pos);
    const auto eq = item.find('=');
    if (eq != std::string_view::npos) {
      out[text::trim(item.substr(0, eq))] = text::trim(item.substr(eq + 1));
    }
    pos = comma + 1;
  }
  return out;
}

bool at_least_neutral(const std::map<std::string, std::string>& bands, const std::string& m) {
  auto it = bands.find(m);
  return it == bands.end() || it->second != "de-emphasized";
}

bool at_least_raised(const std::map<std::string, std::string>& bands, const std::string& m) {
  auto it = bands.find(m);
  return it != bands.end() && (it->second == "raised" || it->second == "dominant");
}

std::string first_sentence(const std::string& s) {
  const auto dot = s.find_first_of(".!?");
  return dot == std::string::npos ? s : s.substr(0, dot + 1);
}

std::string optimize(const std::string& tentative, const std::map<std::string, std::string>& bands) {
  const bool concise = bands.count("conciseness") && bands.at("conciseness") == "dominant";
  std::vector<std::string> parts;
  if (concise) {
    parts.push_back(first_sentence(tentative));
    if (at_least_raised(bands, "safety")) parts.emplace_back(kSafety);
    return text::join(parts, " ");
  }
  if (at_least_neutral(bands, "empathy")) parts.emplace_back(kEmpathy);
  parts.push_back(tentative);
  if (at_least_neutral(bands, "explanation")) parts.emplace_back(kExplanation);
  if (at_least_neutral(bands, "safety")) parts.emplace_back(kSafety);
  if (at_least_neutral(bands, "encouragement")) parts.emplace_back(kEncouragement);
  return text::join(parts, " ");
}

bool contains(std::string_view hay, std::string_view needle) {
  return hay.find(needle) != std::string_view::npos;
}

nlohmann::ordered_json judge(const std::string& response, std::mt19937_64& rng, double noise) {
  const auto n_words = text::words(response).size();
  int conciseness = n_words <= 12 ? 5 : n_words <= 20 ? 4 : n_words <= 30 ? 3 : n_words <= 45 ? 2 : 1;
  const int empathy = contains(response, kEmpathy) ? 5 : 2;
  const int encouragement = contains(response, kEncouragement) ? 5 : 2;
  const int explanation = contains(response, kExplanation) ? 5 : 2;
  const int safety = contains(response, kSafety) ? 5 : 3;
  const auto w = text::words(response);
  const int understanding = has_any(w, {"backrest", "bed", "leg", "legs", "section"}) ? 4 : 3;
  std::size_t sentences = 0;
  for (char c : response) sentences += (c == '.' || c == '!' || c == '?');
  const int clarity = sentences <= 3 ? 4 : 3;
  const int appropriateness = (empathy + safety) >= 8 ? 5 : 4;

  nlohmann::ordered_json out;
  const std::array<std::pair<const char*, int>, 8> scores{{{"conciseness", conciseness},
                                                           {"appropriateness", appropriateness},
                                                           {"clarity", clarity},
                                                           {"empathy", empathy},
                                                           {"encouragement", encouragement},
                                                           {"explanation", explanation},
                                                           {"safety", safety},
                                                           {"understanding", understanding}}};
  for (auto [name, score] : scores) {
    if (noise > 0.0 && uniform01(rng) < noise) score += uniform01(rng) < 0.5 ? -1 : 1;
    out[name] = std::clamp(score, 1, 5);
  }
  return out;
}

}  // namespace

std::optional<CommandPlan> infer_plan(std::string_view request) {
  const auto w = text::words(request);
  if (has_any(w, {"exercise"}) && has_any(w, {"leg", "legs"})) {
    return *command::plan_from_label("leg_exercise");
  }
  if (has_any(w, {"rock", "rocking"})) return *command::plan_from_label("back_rocking");

  // "A then B" reads as a sequence of parts.
  std::vector<std::vector<std::string>> parts(1);
  for (const auto& word : w) {
    if (word == "then") {
      parts.emplace_back();
    } else {
      parts.back().push_back(word);
    }
  }
  std::vector<CommandStep> steps;
  for (const auto& part : parts) {
    if (part.empty()) continue;
    auto s = infer_steps(part);
    if (s.empty()) return std::nullopt;
    steps.insert(steps.end(), s.begin(), s.end());
  }
  if (steps.empty()) return std::nullopt;
  if (steps.size() == 1) return CommandPlan::single(steps.front());
  return CommandPlan::sequence(std::move(steps));
}

CommandPlan corrupt_plan(const CommandPlan& plan, std::mt19937_64& rng) {
  CommandPlan out = plan;
  if (out.steps.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick_step(0, out.steps.size() - 1);
  auto& step = out.steps[pick_step(rng)];
  std::uniform_int_distribution<std::size_t> pick_action(0, bed::kActionCount - 2);
  auto idx = pick_action(rng);
  if (idx >= step.action.index()) ++idx;
  step.action = BedAction::from_index(idx);
  return out;
}

OracleBackend::OracleBackend(OracleConfig config) : config_(std::move(config)) {}

Completion OracleBackend::complete(std::span<const ChatMessage> messages) {
  ++calls_;
  if (auto err = check_messages(messages)) return unexpected(*err);
  const ChatMessage* last_user = nullptr;
  for (const auto& m : messages) {
    if (m.role == Role::kUser) last_user = &m;
  }
  if (!last_user) return unexpected(BackendError{BackendError::Kind::kInvalidRequest, "no user turn"});
  const auto block = parse_task(last_user->content);
  if (!block) {
    return unexpected(BackendError{BackendError::Kind::kInvalidRequest, "no task header"});
  }

  const auto request = block->field(fields::kRequest).value_or("");
  const auto request_id = block->field(fields::kRequestId).value_or(request);
  const auto round = block->field(fields::kRound).value_or("0");
  auto rng = stream_rng(config_.seed, request_id + "\x1f" + block->task + "\x1f" + round);

  const TruthEntry* truth = config_.truth ? config_.truth->find(request_id) : nullptr;
  std::optional<CommandPlan> truth_plan;
  Clarity clarity = Clarity::kHigh;
  if (truth) {
    if (auto p = command::plan_from_label(truth->label)) truth_plan = *p;
    clarity = truth->clarity;
  } else {
    truth_plan = infer_plan(request);
  }

  const auto& task = block->task;
  if (task == tasks::kClassify) {
    if (!truth_plan) {
      return render_section(SectionTag::kClassification, "unclear") + "\n" +
             render_section(SectionTag::kQuestion, kClarifyQuestion);
    }
    return render_section(SectionTag::kClassification, class_name(*truth_plan));
  }

  if (task == tasks::kGenerate || task == tasks::kRevise) {
    if (!truth_plan) {
      return render_section(SectionTag::kResponse,
                            "I'm sorry, I'm not sure which part of the bed you mean.");
    }
    const double eps = task == tasks::kGenerate ? config_.corruption[index(clarity)]
                                                : config_.revision_corruption[index(clarity)];
    if (uniform01(rng) < eps) return emit_plan(corrupt_plan(*truth_plan, rng));
    return emit_plan(*truth_plan);
  }

  if (task == tasks::kCheck) {
    const auto plan = command::parse_plan(block->field(fields::kCommand).value_or(""));
    if (!plan || !truth_plan) {
      return render_section(SectionTag::kVerdict, "mismatch: the command could not be matched "
                                                  "to the request");
    }
    if (command::serialize(*plan) == command::serialize(*truth_plan)) {
      return render_section(SectionTag::kVerdict, "consistent");
    }
    if (uniform01(rng) >= config_.detection) {
      return render_section(SectionTag::kVerdict, "consistent");
    }
    std::string reason = "the command does not match the request";
    for (std::size_t i = 0; i < std::min(plan->steps.size(), truth_plan->steps.size()); ++i) {
      if (plan->steps[i].action != truth_plan->steps[i].action) {
        reason = "step " + std::to_string(i) + " moves " + bed::action_name(plan->steps[i].action) +
                 " but the request asks for " + bed::action_name(truth_plan->steps[i].action);
        break;
      }
    }
    return render_section(SectionTag::kVerdict, "mismatch: " + reason);
  }

  if (task == tasks::kOptimize) {
    const auto tentative = block->field(fields::kTentative).value_or("");
    const auto bands = parse_bands(block->field(fields::kEqualizer).value_or(""));
    return render_section(SectionTag::kResponse, optimize(tentative, bands));
  }

  if (task == tasks::kScore) {
    const auto response = block->field(fields::kResponse).value_or("");
    auto judge_rng = stream_rng(config_.seed, block->field(fields::kJudge).value_or("0") + "\x1f" +
                                                  request + "\x1f" + response);
    return judge(response, judge_rng, config_.judge_noise).dump();
  }

  if (task == tasks::kPatient) {
    const auto label = block->field(fields::kLabel).value_or("");
    const auto scenario = block->field(fields::kScenario).value_or("direct_adjustment");
    auto patient_rng =
        stream_rng(config_.seed, "patient\x1f" + block->field(fields::kSeed).value_or("0"));
    return patient_request(label, scenario, patient_rng);
  }

  if (task == tasks::kNurse) {
    const auto label = block->field(fields::kLabel).value_or("");
    if (auto plan = command::plan_from_label(label)) return nurse_response_for(*plan);
    if (truth_plan) return nurse_response_for(*truth_plan);
    return std::string("Of course, I'll take care of that for you now.");
  }

  return unexpected(BackendError{BackendError::Kind::kInvalidRequest, "unknown task " + task});
}

}  // namespace aoecr::llm
