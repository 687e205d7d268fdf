#include "aoecr/platform/bed_service.h"

#include <spdlog/spdlog.h>

namespace aoecr::platform {

BedService::BedService(BrokerPtr broker, BedServiceConfig config)
    : broker_(std::move(broker)), config_(std::move(config)), model_(config_.bed) {}

BedService::~BedService() { stop(); }

void BedService::start() {
  {
    std::lock_guard lock(mu_);
    if (running_) return;
    running_ = true;
  }
  sub_command_ = broker_->subscribe(topic_for("+", topics::kCommand),
                                    [this](const WireEnvelope& e) { on_command(e); });
  sub_interrupt_ = broker_->subscribe(topic_for("+", topics::kInterrupt),
                                      [this](const WireEnvelope& e) { on_interrupt(e); });
  sub_request_ = broker_->subscribe(topic_for("+", topics::kRequest),
                                    [this](const WireEnvelope& e) { track(e.session_id); });
  loop_ = std::thread([this] { run(); });
}

void BedService::stop() {
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    running_ = false;
  }
  cv_.notify_all();
  broker_->unsubscribe(sub_command_);
  broker_->unsubscribe(sub_interrupt_);
  broker_->unsubscribe(sub_request_);
  if (loop_.joinable()) loop_.join();
}

void BedService::track(const std::string& session_id) {
  std::lock_guard lock(mu_);
  sessions_.insert(session_id);
}

bed::BedState BedService::snapshot() const {
  std::lock_guard lock(mu_);
  return model_.state();
}

bed::Telemetry BedService::telemetry() const {
  std::lock_guard lock(mu_);
  return model_.telemetry();
}

bool BedService::idle() const {
  std::lock_guard lock(mu_);
  return model_.idle();
}

std::optional<std::chrono::steady_clock::time_point> BedService::last_start() const {
  std::lock_guard lock(mu_);
  return last_start_;
}

void BedService::on_command(const WireEnvelope& e) {
  if (!dedupe_.accept(e)) return;
  if (!e.payload.contains("plan")) {
    spdlog::warn("command envelope {} without plan", e.seq);
    return;
  }
  auto plan = command::parse_plan(e.payload["plan"].dump());
  if (!plan) {
    spdlog::warn("rejected command {}: {} {}", e.seq, plan.error().path, plan.error().reason);
    return;
  }
  if (auto v = command::validate_plan(*plan); !v.empty()) {
    spdlog::warn("rejected command {}: {} {}", e.seq, v.front().path, v.front().reason);
    return;
  }
  {
    std::lock_guard lock(mu_);
    sessions_.insert(e.session_id);
    model_.start_plan(*plan);
    last_start_ = std::chrono::steady_clock::now();
  }
  publish_telemetry(e.session_id);
}

void BedService::on_interrupt(const WireEnvelope& e) {
  if (!dedupe_.accept(e)) return;
  {
    std::lock_guard lock(mu_);
    sessions_.insert(e.session_id);
    model_.interrupt();
  }
  ++interrupts_;
  publish_telemetry_all();
}

void BedService::publish_telemetry(const std::string& session_id) {
  nlohmann::json payload;
  {
    std::lock_guard lock(mu_);
    payload = bed::to_json(model_.telemetry());
  }
  if (auto r = broker_->publish(make_envelope(seq_, session_id, topics::kTelemetry, payload)); !r) {
    spdlog::debug("telemetry not published: {}", r.error().message);
  }
}

void BedService::publish_telemetry_all() {
  std::set<std::string> sessions;
  {
    std::lock_guard lock(mu_);
    sessions = sessions_;
  }
  for (const auto& s : sessions) publish_telemetry(s);
}

void BedService::run() {
  using clock = std::chrono::steady_clock;
  const auto tick = config_.tick;
  const auto frame = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(config_.telemetry_hz > 0 ? 1.0 / config_.telemetry_hz : 1e9));
  auto next_tick = clock::now() + tick;
  auto next_frame = clock::now() + frame;
  std::unique_lock lock(mu_);
  while (running_) {
    cv_.wait_until(lock, std::min(next_tick, next_frame), [this] { return !running_; });
    if (!running_) break;
    const auto now = clock::now();
    if (now >= next_tick) {
      model_.tick(std::chrono::duration<double>(tick).count());
      ++ticks_;
      next_tick += tick;
      // Fall behind gracefully instead of bursting.
      if (next_tick < now) next_tick = now + tick;
    }
    if (now >= next_frame) {
      next_frame += frame;
      if (next_frame < now) next_frame = now + frame;
      lock.unlock();
      publish_telemetry_all();
      lock.lock();
    }
  }
}

}  // namespace aoecr::platform
