#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aoecr/bed/bed_model.h"
#include "aoecr/command/command.h"
#include "aoecr/command/degree.h"
#include "aoecr/expert/equalizer.h"
#include "aoecr/llm/backend.h"
#include "aoecr/llm/prompt.h"
#include "aoecr/util/expected.h"

namespace aoecr::cos {

enum class RequestClass { kUnclear, kSingleAction, kActionSequence, kLoopAction };

std::string_view to_string(RequestClass c);
/// Unrecognized text maps to kUnclear.
RequestClass parse_request_class(std::string_view text);

struct SelfCheckVerdict {
  bool consistent = false;
  std::string reason;  // non-empty when !consistent

  static SelfCheckVerdict ok() { return {true, {}}; }
  static SelfCheckVerdict mismatch(std::string reason);
};

/// Verdict section text: "consistent" or "mismatch: <reason>". Anything else is
/// a mismatch.
SelfCheckVerdict parse_verdict(std::string_view text);

struct Execute {
  command::CommandPlan plan;
  std::string response;
};
struct Clarify {
  std::string question;
};
struct Refuse {
  std::string reason;
};

using AgentDecision = std::variant<Execute, Clarify, Refuse>;

std::string_view decision_kind(const AgentDecision& d);

struct SessionContext {
  std::string session_id;
  std::string turn_id;  // request id carried in prompts; keys oracle truth and rng streams
  llm::Messages history;
  std::optional<bed::Telemetry> last_telemetry;
  bool pending_clarification = false;
  std::string pending_request;
  expert::EqualizerWeights weights = expert::EqualizerWeights::uniform();
};

struct PipelineOptions {
  bool classify = true;
  bool self_check = true;
  bool predict_time = true;
  int max_revisions = 2;
  std::vector<std::string> stop_keywords{"stop", "halt"};
  int default_loop_repetitions = 3;
  std::size_t history_limit = 6;
  command::Capabilities caps;
  command::DegreeTable degrees = command::DegreeTable::defaults();
  llm::PromptBundle bundle = llm::default_bundle();
};

struct PipelineTrace {
  std::optional<RequestClass> request_class;
  int backend_calls = 0;
  int parse_retries = 0;
  int revisions = 0;
  std::vector<SelfCheckVerdict> verdicts;
  bool stop_bypass = false;
};

struct Tentative {
  command::CommandPlan plan;
  std::string response;
};

struct GenerateError {
  std::string reason;
};

struct ClassifyResult {
  RequestClass request_class = RequestClass::kUnclear;
  std::string question;  // set when the backend asked one
};

struct HandleResult {
  AgentDecision decision;
  PipelineTrace trace;
};

/// Upper bound on backend calls for one handle_request: classification, up to
/// two generation attempts, the first check, and a revision plus re-check per
/// round.
constexpr int max_backend_calls(int max_revisions) { return 4 + 2 * max_revisions; }

/// The agent's inference chain: classify, generate, self-check, revise,
/// scale by degree, validate.
class CosPipeline {
 public:
  CosPipeline(llm::BackendPtr backend, PipelineOptions options = {});

  const PipelineOptions& options() const { return options_; }

  Expected<ClassifyResult, llm::BackendError> classify_request(
      const SessionContext& ctx, std::string_view request, PipelineTrace* trace = nullptr);

  /// One reprompt on a malformed emission; a second failure is an error.
  Expected<Tentative, GenerateError> generate_tentative(const SessionContext& ctx,
                                                        std::string_view request,
                                                        PipelineTrace* trace = nullptr);

  Expected<SelfCheckVerdict, llm::BackendError> self_check(const SessionContext& ctx,
                                                           std::string_view request,
                                                           const command::CommandPlan& plan,
                                                           int round = 0,
                                                           PipelineTrace* trace = nullptr);

  /// One revision round with the mismatch reason in the prompt.
  Expected<Tentative, GenerateError> revise(const SessionContext& ctx, std::string_view request,
                                            const command::CommandPlan& plan,
                                            std::string_view reason, int round,
                                            PipelineTrace* trace = nullptr);

  /// Scales every step's extent by the first degree phrase in the request.
  command::CommandPlan predict_action_time(std::string_view request,
                                           const command::CommandPlan& plan) const;

  /// Full chain. Never throws; failures become refuse or clarify decisions.
  /// Updates ctx (history, pending clarification).
  HandleResult handle_request(SessionContext& ctx, std::string_view request);

  bool is_stop_request(std::string_view request) const;

 private:
  llm::Completion call(const llm::Messages& messages, PipelineTrace* trace);
  HandleResult finish(SessionContext& ctx, std::string_view request, HandleResult result);

  llm::BackendPtr backend_;
  PipelineOptions options_;
};

/// Stated repetition count ("5 times", "twice"), if any.
std::optional<int> stated_repetitions(std::string_view request);

}  // namespace aoecr::cos
