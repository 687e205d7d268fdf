#include "aoecr/platform/agent_service.h"

#include <future>

#include <spdlog/spdlog.h>

#include "aoecr/command/command.h"
#include "aoecr/expert/optimizer.h"

namespace aoecr::platform {

AgentService::AgentService(BrokerPtr broker, llm::BackendPtr backend, llm::BackendPtr expert,
                           AgentServiceConfig config)
    : broker_(std::move(broker)),
      pipeline_(std::make_shared<cos::CosPipeline>(std::move(backend), config.pipeline)),
      expert_(std::move(expert)),
      config_(std::move(config)),
      store_(config_.store_dir) {}

AgentService::~AgentService() { stop(); }

void AgentService::start() {
  {
    std::lock_guard lock(mu_);
    if (running_) return;
    running_ = true;
  }
  subs_.push_back(broker_->subscribe(topic_for("+", topics::kRequest),
                                     [this](const WireEnvelope& e) { enqueue(e); }));
  subs_.push_back(broker_->subscribe(topic_for("+", topics::kFeedback),
                                     [this](const WireEnvelope& e) { enqueue(e); }));
  subs_.push_back(broker_->subscribe(topic_for("+", topics::kTelemetry),
                                     [this](const WireEnvelope& e) { on_telemetry(e); }));
  subs_.push_back(broker_->subscribe(topic_for("+", topics::kInterrupt),
                                     [this](const WireEnvelope& e) { on_interrupt(e); }));
}

void AgentService::stop() {
  std::map<std::string, std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    running_ = false;
    sessions = sessions_;
  }
  for (auto id : subs_) broker_->unsubscribe(id);
  subs_.clear();
  for (auto& [id, s] : sessions) {
    { std::lock_guard lock(s->mu); }
    s->cv.notify_all();
    if (s->worker.joinable()) s->worker.join();
  }
  idle_cv_.notify_all();
}

void AgentService::drain() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return outstanding_ == 0 || !running_; });
}

EqualizerState AgentService::equalizer(const std::string& session_id) {
  auto s = session(session_id);
  std::lock_guard lock(s->mu);
  return s->eq;
}

std::shared_ptr<AgentService::Session> AgentService::session(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it != sessions_.end()) return it->second;

  auto s = std::make_shared<Session>();
  s->id = id;
  s->ctx.session_id = id;
  // The log is the source of truth; the snapshot file is a cache of it.
  s->eq = replay_equalizer(store_.read(id), config_.feedback_rate);
  if (auto saved = store_.load_equalizer(id);
      saved && (saved->weights != s->eq.weights || saved->update_count != s->eq.update_count)) {
    spdlog::warn("session {}: equalizer snapshot disagrees with log, using the log", id);
    (void)store_.save_equalizer(id, s->eq);
  }
  s->ctx.weights = s->eq.weights;
  if (running_) s->worker = std::thread([this, s] { work(s); });
  sessions_.emplace(id, s);
  return s;
}

void AgentService::enqueue(const WireEnvelope& e) {
  if (!valid_session_id(e.session_id) || !dedupe_.accept(e)) return;
  auto s = session(e.session_id);
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    ++outstanding_;
  }
  {
    std::lock_guard lock(s->mu);
    s->jobs.push_back(e);
  }
  s->cv.notify_one();
}

void AgentService::job_done() {
  std::lock_guard lock(mu_);
  if (--outstanding_ == 0) idle_cv_.notify_all();
}

void AgentService::on_telemetry(const WireEnvelope& e) {
  if (!valid_session_id(e.session_id)) return;
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(e.session_id);
    if (it == sessions_.end()) return;
    s = it->second;
  }
  // Telemetry only feeds the next request's context; a parse failure keeps the old one.
  bed::Telemetry t;
  try {
    t.ts = e.payload.at("ts").get<double>();
    std::size_t i = 0;
    for (auto m : {bed::Mechanism::kLift, bed::Mechanism::kBackrest, bed::Mechanism::kLeftLeg,
                   bed::Mechanism::kRightLeg}) {
      const auto& entry = e.payload.at("mechanisms").at(std::string(bed::to_string(m)));
      t.position[i] = entry.at("pos").get<double>();
      t.moving[i] = entry.at("moving").get<bool>();
      ++i;
    }
  } catch (const nlohmann::json::exception&) {
    return;
  }
  std::lock_guard lock(s->mu);
  s->ctx.last_telemetry = t;
}

void AgentService::on_interrupt(const WireEnvelope& e) {
  if (!valid_session_id(e.session_id)) return;
  (void)store_.append(e.session_id, {{"type", events::kInterrupt}, {"seq", e.seq}});
}

void AgentService::work(const std::shared_ptr<Session>& s) {
  while (true) {
    WireEnvelope job;
    {
      std::unique_lock lock(s->mu);
      s->cv.wait(lock, [&] {
        std::lock_guard outer(mu_);
        return !s->jobs.empty() || !running_;
      });
      if (s->jobs.empty()) return;
      job = std::move(s->jobs.front());
      s->jobs.pop_front();
    }
    {
      std::lock_guard outer(mu_);
      if (!running_) return;
    }
    const auto parts = split_topic(job.topic);
    try {
      if (parts && parts->kind == topics::kRequest) handle_request(*s, job);
      if (parts && parts->kind == topics::kFeedback) handle_feedback(*s, job);
    } catch (const std::exception& ex) {
      spdlog::error("session {}: {} failed: {}", s->id, job.topic, ex.what());
    }
    job_done();
  }
}

void AgentService::handle_request(Session& s, const WireEnvelope& e) {
  const auto text = e.payload.value("text", std::string());
  const auto request_id = e.payload.value("request_id", s.id + "-" + std::to_string(e.seq));
  (void)store_.append(s.id, {{"type", events::kRequest},
                             {"request_id", request_id},
                             {"seq", e.seq},
                             {"text", text}});

  auto ctx = std::make_shared<cos::SessionContext>();
  {
    std::lock_guard lock(s.mu);
    s.ctx.turn_id = request_id;
    s.ctx.weights = s.eq.weights;
    *ctx = s.ctx;
  }

  // The chain runs on its own thread so a hung backend cannot hold the session
  // past the deadline. The thread owns everything it touches.
  auto pipeline = pipeline_;
  auto task = std::make_shared<std::packaged_task<cos::HandleResult()>>(
      [pipeline, ctx, text] { return pipeline->handle_request(*ctx, text); });
  auto future = task->get_future();
  std::thread([task] { (*task)(); }).detach();

  cos::AgentDecision decision = cos::Refuse{"decision deadline exceeded"};
  int calls = 0;
  if (future.wait_for(config_.deadline) == std::future_status::ready) {
    auto result = future.get();
    decision = std::move(result.decision);
    calls = result.trace.backend_calls;
    std::lock_guard lock(s.mu);
    auto telemetry = s.ctx.last_telemetry;
    s.ctx = *ctx;
    s.ctx.last_telemetry = telemetry;
  } else {
    spdlog::warn("session {}: request {} missed the {} ms deadline", s.id, request_id,
                 config_.deadline.count());
  }

  nlohmann::json payload{{"request_id", request_id}, {"kind", cos::decision_kind(decision)}};
  std::optional<nlohmann::json> plan_json;
  if (auto* exec = std::get_if<cos::Execute>(&decision)) {
    std::string response = exec->response;
    if (expert_ && exec->plan.kind != command::PlanKind::kStop) {
      response = expert::optimize_response(response, text, ctx->weights, *expert_);
    }
    plan_json = nlohmann::json::parse(command::serialize(exec->plan));
    payload["response"] = response;
    payload["plan"] = *plan_json;
  } else if (auto* clarify = std::get_if<cos::Clarify>(&decision)) {
    payload["question"] = clarify->question;
  } else if (auto* refuse = std::get_if<cos::Refuse>(&decision)) {
    payload["reason"] = refuse->reason;
  }

  nlohmann::json event{{"type", events::kDecision}, {"decision", payload}, {"backend_calls", calls}};
  {
    std::lock_guard lock(s.mu);
    if (s.ctx.last_telemetry) event["telemetry"] = bed::to_json(*s.ctx.last_telemetry);
  }
  (void)store_.append(s.id, event);
  publish(s.id, topics::kDecision, payload);
  ++decisions_;

  if (plan_json) {
    nlohmann::json command{{"request_id", request_id}, {"plan", *plan_json}};
    (void)store_.append(s.id, {{"type", events::kCommand}, {"command", command}});
    publish(s.id, topics::kCommand, command);
  }
}

void AgentService::handle_feedback(Session& s, const WireEnvelope& e) {
  auto scores = expert::scores_from_json(e.payload.value("scores", nlohmann::json()));
  if (!scores) {
    spdlog::warn("session {}: malformed feedback {}", s.id, e.seq);
    return;
  }
  EqualizerState eq;
  {
    std::lock_guard lock(s.mu);
    s.eq.weights = expert::update_equalizer(s.eq.weights, *scores, config_.feedback_rate);
    ++s.eq.update_count;
    s.ctx.weights = s.eq.weights;
    eq = s.eq;
  }
  (void)store_.append(s.id, {{"type", events::kFeedback},
                             {"seq", e.seq},
                             {"scores", expert::scores_to_json(*scores)},
                             {"rate", config_.feedback_rate}});
  if (auto r = store_.save_equalizer(s.id, eq); !r) spdlog::error("{}", r.error());
}

void AgentService::publish(std::string_view session_id, std::string_view kind,
                           nlohmann::json payload) {
  auto envelope = make_envelope(seq_, session_id, kind, std::move(payload));
  auto backoff = config_.publish_backoff;
  for (int attempt = 1; attempt <= config_.publish_attempts; ++attempt) {
    auto r = broker_->publish(envelope);
    if (r) return;
    if (attempt == config_.publish_attempts) {
      spdlog::error("dropping {} after {} attempts: {}", envelope.topic, attempt, r.error().message);
      return;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace aoecr::platform
