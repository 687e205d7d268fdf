#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace aoecr::llm {

// Header block at the top of every pipeline user message:
//
//   TASK: generate
//   REQUEST_ID: pn-000001-h
//   REQUEST: please raise the backrest
//
//   <free-form instructions>
//
// Real models read it as part of the instructions; the oracle backend parses it.
struct TaskBlock {
  std::string task;
  std::map<std::string, std::string> fields;  // upper-case keys
  std::string instructions;

  std::optional<std::string> field(const std::string& key) const;
};

std::string render_task(const TaskBlock& block);
std::optional<TaskBlock> parse_task(std::string_view text);

}  // namespace aoecr::llm

namespace aoecr::llm::tasks {

inline constexpr const char* kClassify = "classify";
inline constexpr const char* kGenerate = "generate";
inline constexpr const char* kCheck = "check";
inline constexpr const char* kRevise = "revise";
inline constexpr const char* kOptimize = "optimize";
inline constexpr const char* kScore = "score";
inline constexpr const char* kPatient = "patient";
inline constexpr const char* kNurse = "nurse";

}  // namespace aoecr::llm::tasks

namespace aoecr::llm::fields {

inline constexpr const char* kRequestId = "REQUEST_ID";
inline constexpr const char* kRequest = "REQUEST";
inline constexpr const char* kRound = "ROUND";
inline constexpr const char* kCommand = "COMMAND";
inline constexpr const char* kReason = "REASON";
inline constexpr const char* kParseError = "PARSE_ERROR";
inline constexpr const char* kLabel = "LABEL";
inline constexpr const char* kScenario = "SCENARIO";
inline constexpr const char* kSeed = "SEED";
inline constexpr const char* kTentative = "TENTATIVE";
inline constexpr const char* kEqualizer = "EQUALIZER";
inline constexpr const char* kResponse = "RESPONSE";
inline constexpr const char* kJudge = "JUDGE";

}  // namespace aoecr::llm::fields
