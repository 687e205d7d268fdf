#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "aoecr/platform/wire.h"
#include "aoecr/util/expected.h"

namespace aoecr::platform {

using Handler = std::function<void(const WireEnvelope&)>;

struct BrokerError {
  std::string message;
};

/// Pub/sub with MQTT topic semantics and at-least-once delivery. Handlers run
/// on the broker's delivery thread and must not block.
class Broker {
 public:
  virtual ~Broker() = default;

  virtual std::uint64_t subscribe(std::string filter, Handler handler) = 0;
  virtual void unsubscribe(std::uint64_t id) = 0;
  virtual Expected<bool, BrokerError> publish(WireEnvelope envelope) = 0;
  virtual bool connected() const = 0;
};

using BrokerPtr = std::shared_ptr<Broker>;

/// Broker inside the process: one dispatcher thread delivers envelopes in
/// publish order.
class InProcessBroker final : public Broker {
 public:
  InProcessBroker();
  ~InProcessBroker() override;

  InProcessBroker(const InProcessBroker&) = delete;
  InProcessBroker& operator=(const InProcessBroker&) = delete;

  std::uint64_t subscribe(std::string filter, Handler handler) override;
  void unsubscribe(std::uint64_t id) override;
  Expected<bool, BrokerError> publish(WireEnvelope envelope) override;
  bool connected() const override { return connected_.load(); }

  /// Simulates an outage: publishes fail while disconnected.
  void set_connected(bool up) { connected_.store(up); }

  /// Blocks until every envelope published so far has been delivered.
  void drain();

  std::uint64_t published() const { return published_.load(); }

 private:
  void run();

  struct Subscription {
    std::string filter;
    std::shared_ptr<Handler> handler;
  };

  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<WireEnvelope> queue_;
  std::map<std::uint64_t, Subscription> subs_;
  std::uint64_t next_id_ = 1;
  bool stopping_ = false;
  bool delivering_ = false;
  std::atomic<bool> connected_{true};
  std::atomic<std::uint64_t> published_{0};
  std::thread worker_;
};

}  // namespace aoecr::platform
