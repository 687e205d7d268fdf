#include "aoecr/cos/pipeline.h"

#include <algorithm>
#include <cassert>
#include <map>

#include <spdlog/spdlog.h>

#include "aoecr/cos/prompts.h"
#include "aoecr/llm/sections.h"
#include "aoecr/util/text.h"

namespace aoecr::cos {

using command::CommandPlan;
using llm::SectionTag;

std::string_view to_string(RequestClass c) {
  switch (c) {
    case RequestClass::kUnclear:
      return "unclear";
    case RequestClass::kSingleAction:
      return "single_action";
    case RequestClass::kActionSequence:
      return "action_sequence";
    case RequestClass::kLoopAction:
      return "loop_action";
  }
  return "unclear";
}

RequestClass parse_request_class(std::string_view text) {
  auto words = text::words(text);
  if (words.empty()) return RequestClass::kUnclear;
  std::string key = words[0];
  if (words.size() >= 2 && (words[1] == "action" || words[1] == "sequence")) {
    key += "_" + words[1];
  }
  for (auto c : {RequestClass::kUnclear, RequestClass::kSingleAction,
                 RequestClass::kActionSequence, RequestClass::kLoopAction}) {
    if (to_string(c) == key) return c;
  }
  return RequestClass::kUnclear;
}

SelfCheckVerdict SelfCheckVerdict::mismatch(std::string reason) {
  if (reason.empty()) reason = "unspecified mismatch";
  return {false, std::move(reason)};
}

SelfCheckVerdict parse_verdict(std::string_view text) {
  const auto trimmed = text::trim(text);
  const auto lower = text::to_lower(trimmed);
  if (lower.rfind("consistent", 0) == 0) return SelfCheckVerdict::ok();
  if (lower.rfind("mismatch", 0) == 0) {
    auto rest = trimmed.substr(std::string_view("mismatch").size());
    if (!rest.empty() && rest.front() == ':') rest.erase(0, 1);
    return SelfCheckVerdict::mismatch(text::trim(rest));
  }
  return SelfCheckVerdict::mismatch("unparseable verdict");
}

std::string_view decision_kind(const AgentDecision& d) {
  if (std::holds_alternative<Execute>(d)) return "execute";
  if (std::holds_alternative<Clarify>(d)) return "clarify";
  return "refuse";
}

std::optional<int> stated_repetitions(std::string_view request) {
  static const std::map<std::string, int, std::less<>> kNumbers{
      {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5},
      {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10}};
  const auto w = text::words(request);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == "once") return 1;
    if (w[i] == "twice") return 2;
    if (w[i] == "thrice") return 3;
    if (i + 1 < w.size() && (w[i + 1] == "times" || w[i + 1] == "rounds")) {
      if (auto it = kNumbers.find(w[i]); it != kNumbers.end()) return it->second;
      if (!w[i].empty() && std::all_of(w[i].begin(), w[i].end(), ::isdigit) && w[i].size() < 6) {
        return std::stoi(w[i]);
      }
    }
  }
  return std::nullopt;
}

namespace {

constexpr std::string_view kExhaustedQuestion =
    "I want to be sure I move the right part of the bed. Could you tell me once more what "
    "you would like me to do?";
constexpr std::string_view kDefaultQuestion =
    "Could you tell me which part of the bed you would like to move, and whether it should go "
    "up or down?";

Expected<Tentative, GenerateError> read_tentative(const std::string& emission) {
  auto sections = llm::extract_sections(emission, {SectionTag::kCommand, SectionTag::kResponse});
  if (!sections) return unexpected(GenerateError{sections.error().message()});
  auto plan = command::parse_plan(sections->at(SectionTag::kCommand));
  if (!plan) return unexpected(GenerateError{"command " + plan.error().message()});
  const auto& response = sections->at(SectionTag::kResponse);
  if (response.empty()) return unexpected(GenerateError{"empty response section"});
  return Tentative{std::move(plan).value(), response};
}

}  // namespace

CosPipeline::CosPipeline(llm::BackendPtr backend, PipelineOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {}

llm::Completion CosPipeline::call(const llm::Messages& messages, PipelineTrace* trace) {
  if (trace) ++trace->backend_calls;
  return backend_->complete(messages);
}

bool CosPipeline::is_stop_request(std::string_view request) const {
  const auto w = text::words(request);
  return std::any_of(w.begin(), w.end(), [&](const std::string& word) {
    return std::find(options_.stop_keywords.begin(), options_.stop_keywords.end(), word) !=
           options_.stop_keywords.end();
  });
}

Expected<ClassifyResult, llm::BackendError> CosPipeline::classify_request(
    const SessionContext& ctx, std::string_view request, PipelineTrace* trace) {
  auto emission = call(prompts::classification(options_.bundle, ctx, request), trace);
  if (!emission) return unexpected(emission.error());
  ClassifyResult out;
  auto sections = llm::extract_sections(*emission);
  if (sections && sections->contains(SectionTag::kClassification)) {
    out.request_class = parse_request_class(sections->at(SectionTag::kClassification));
  }
  if (sections && sections->contains(SectionTag::kQuestion)) {
    out.question = sections->at(SectionTag::kQuestion);
  }
  return out;
}

Expected<Tentative, GenerateError> CosPipeline::generate_tentative(const SessionContext& ctx,
                                                                   std::string_view request,
                                                                   PipelineTrace* trace) {
  auto emission = call(prompts::generation(options_.bundle, ctx, request), trace);
  if (!emission) return unexpected(GenerateError{emission.error().message()});
  auto first = read_tentative(*emission);
  if (first) return first;

  if (trace) ++trace->parse_retries;
  auto retry =
      call(prompts::generation(options_.bundle, ctx, request, first.error().reason), trace);
  if (!retry) return unexpected(GenerateError{retry.error().message()});
  return read_tentative(*retry);
}

Expected<SelfCheckVerdict, llm::BackendError> CosPipeline::self_check(const SessionContext& ctx,
                                                                      std::string_view request,
                                                                      const CommandPlan& plan,
                                                                      int round,
                                                                      PipelineTrace* trace) {
  auto emission = call(prompts::check(options_.bundle, ctx, request, plan, round), trace);
  if (!emission) return unexpected(emission.error());
  auto sections = llm::extract_sections(*emission, {SectionTag::kVerdict});
  if (!sections) return SelfCheckVerdict::mismatch("no verdict in self-check answer");
  return parse_verdict(sections->at(SectionTag::kVerdict));
}

Expected<Tentative, GenerateError> CosPipeline::revise(const SessionContext& ctx,
                                                       std::string_view request,
                                                       const CommandPlan& plan,
                                                       std::string_view reason, int round,
                                                       PipelineTrace* trace) {
  auto emission =
      call(prompts::revision(options_.bundle, ctx, request, plan, reason, round), trace);
  if (!emission) return unexpected(GenerateError{emission.error().message()});
  return read_tentative(*emission);
}

CommandPlan CosPipeline::predict_action_time(std::string_view request,
                                             const CommandPlan& plan) const {
  const auto degree = options_.degrees.match(request);
  if (!degree) return plan;
  CommandPlan out = plan;
  const double f = std::clamp(degree->extent_fraction, 0.0, 1.0);
  if (f <= 0.0) return plan;
  for (auto& s : out.steps) s.extent *= f;
  return out;
}

HandleResult CosPipeline::finish(SessionContext& ctx, std::string_view request,
                                 HandleResult result) {
  ctx.history.push_back({llm::Role::kUser, std::string(request)});
  std::string reply;
  if (auto* e = std::get_if<Execute>(&result.decision)) reply = e->response;
  if (auto* c = std::get_if<Clarify>(&result.decision)) reply = c->question;
  if (auto* r = std::get_if<Refuse>(&result.decision)) reply = "I can't do that: " + r->reason;
  ctx.history.push_back({llm::Role::kAssistant, reply});
  while (ctx.history.size() > options_.history_limit) ctx.history.erase(ctx.history.begin());
  assert(result.trace.backend_calls <= max_backend_calls(options_.max_revisions));
  return result;
}

HandleResult CosPipeline::handle_request(SessionContext& ctx, std::string_view raw_request) {
  HandleResult result{Refuse{"not processed"}, {}};
  auto& trace = result.trace;

  if (is_stop_request(raw_request)) {
    ctx.pending_clarification = false;
    ctx.pending_request.clear();
    trace.stop_bypass = true;
    result.decision = Execute{CommandPlan::stop(), "Stopping now."};
    return finish(ctx, raw_request, std::move(result));
  }

  std::string request(raw_request);
  if (ctx.pending_clarification) {
    request = ctx.pending_request + " " + request;
    ctx.pending_clarification = false;
    ctx.pending_request.clear();
  }

  auto ask = [&](std::string question) {
    ctx.pending_clarification = true;
    ctx.pending_request = request;
    result.decision = Clarify{std::move(question)};
    return finish(ctx, request, std::move(result));
  };
  auto refuse = [&](std::string reason) {
    spdlog::info("refusing request: {}", reason);
    result.decision = Refuse{std::move(reason)};
    return finish(ctx, request, std::move(result));
  };

  std::optional<RequestClass> cls;
  if (options_.classify) {
    auto classified = classify_request(ctx, request, &trace);
    if (!classified) return refuse("backend unavailable: " + classified.error().message());
    cls = classified->request_class;
    trace.request_class = cls;
    if (*cls == RequestClass::kUnclear) {
      return ask(classified->question.empty() ? std::string(kDefaultQuestion)
                                              : classified->question);
    }
  }

  auto tentative = generate_tentative(ctx, request, &trace);
  if (!tentative) return refuse("could not produce a valid command: " + tentative.error().reason);
  CommandPlan plan = tentative->plan;
  std::string response = tentative->response;

  if (options_.self_check) {
    auto verdict = self_check(ctx, request, plan, 0, &trace);
    if (!verdict) return refuse("backend unavailable: " + verdict.error().message());
    trace.verdicts.push_back(*verdict);
    int round = 0;
    while (!trace.verdicts.back().consistent) {
      if (round == options_.max_revisions) return ask(std::string(kExhaustedQuestion));
      ++round;
      ++trace.revisions;
      auto revised = revise(ctx, request, plan, trace.verdicts.back().reason, round, &trace);
      if (!revised) {
        trace.verdicts.push_back(
            SelfCheckVerdict::mismatch("revision unusable: " + revised.error().reason));
        continue;
      }
      plan = revised->plan;
      response = revised->response;
      auto again = self_check(ctx, request, plan, round, &trace);
      if (!again) return refuse("backend unavailable: " + again.error().message());
      trace.verdicts.push_back(*again);
    }
  }

  if (options_.predict_time) plan = predict_action_time(request, plan);
  if (plan.kind == command::PlanKind::kLoop && cls == RequestClass::kLoopAction) {
    plan.repetitions = stated_repetitions(request).value_or(options_.default_loop_repetitions);
  }

  const auto violations = command::validate_plan(plan, options_.caps);
  if (!violations.empty()) {
    std::string reason = "command failed validation:";
    for (const auto& v : violations) reason += " " + v.path + " " + v.reason + ";";
    return refuse(reason);
  }

  // Gate: only validated plans whose last verdict was consistent leave the chain.
  assert(!options_.self_check || trace.verdicts.back().consistent);
  result.decision = Execute{std::move(plan), std::move(response)};
  return finish(ctx, request, std::move(result));
}

}  // namespace aoecr::cos
