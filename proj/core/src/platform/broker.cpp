#include "aoecr/platform/broker.h"

#include <vector>

#include <spdlog/spdlog.h>

namespace aoecr::platform {

InProcessBroker::InProcessBroker() : worker_([this] { run(); }) {}

InProcessBroker::~InProcessBroker() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

std::uint64_t InProcessBroker::subscribe(std::string filter, Handler handler) {
  std::lock_guard lock(mu_);
  const auto id = next_id_++;
  subs_.emplace(id, Subscription{std::move(filter), std::make_shared<Handler>(std::move(handler))});
  return id;
}

void InProcessBroker::unsubscribe(std::uint64_t id) {
  std::lock_guard lock(mu_);
  subs_.erase(id);
}

Expected<bool, BrokerError> InProcessBroker::publish(WireEnvelope envelope) {
  if (!connected_.load()) return unexpected(BrokerError{"broker unavailable"});
  {
    std::lock_guard lock(mu_);
    if (stopping_) return unexpected(BrokerError{"broker shutting down"});
    queue_.push_back(std::move(envelope));
  }
  ++published_;
  cv_.notify_one();
  return true;
}

void InProcessBroker::drain() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return (queue_.empty() && !delivering_) || stopping_; });
}

void InProcessBroker::run() {
  std::unique_lock lock(mu_);
  while (true) {
    cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    if (stopping_) break;
    auto envelope = std::move(queue_.front());
    queue_.pop_front();
    std::vector<std::shared_ptr<Handler>> targets;
    for (const auto& [id, sub] : subs_) {
      if (topic_matches(sub.filter, envelope.topic)) targets.push_back(sub.handler);
    }
    delivering_ = true;
    lock.unlock();
    for (const auto& h : targets) {
      try {
        (*h)(envelope);
      } catch (const std::exception& e) {
        spdlog::error("handler for {} threw: {}", envelope.topic, e.what());
      }
    }
    lock.lock();
    delivering_ = false;
    if (queue_.empty()) idle_cv_.notify_all();
  }
  idle_cv_.notify_all();
}

}  // namespace aoecr::platform
