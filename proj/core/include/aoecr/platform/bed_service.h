#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include "aoecr/bed/bed_model.h"
#include "aoecr/platform/broker.h"

namespace aoecr::platform {

struct BedServiceConfig {
  bed::BedConfig bed;
  std::chrono::milliseconds tick{100};
  double telemetry_hz = 2.0;
};

/// The bed's execution loop. Sole owner of the bed model: commands start
/// plans, interrupts halt motion on delivery, telemetry goes to every known
/// session.
class BedService {
 public:
  BedService(BrokerPtr broker, BedServiceConfig config = {});
  ~BedService();

  BedService(const BedService&) = delete;
  BedService& operator=(const BedService&) = delete;

  void start();
  void stop();

  /// Adds a session to the telemetry fan-out.
  void track(const std::string& session_id);

  bed::BedState snapshot() const;
  bed::Telemetry telemetry() const;
  bool idle() const;
  std::uint64_t ticks() const { return ticks_.load(); }
  std::uint64_t interrupts() const { return interrupts_.load(); }
  /// Steady-clock time of the most recent plan start.
  std::optional<std::chrono::steady_clock::time_point> last_start() const;

 private:
  void on_command(const WireEnvelope& e);
  void on_interrupt(const WireEnvelope& e);
  void publish_telemetry(const std::string& session_id);
  void publish_telemetry_all();
  void run();

  BrokerPtr broker_;
  BedServiceConfig config_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bed::BedModel model_;
  std::set<std::string> sessions_;
  std::optional<std::chrono::steady_clock::time_point> last_start_;
  SeqCounter seq_;
  Deduplicator dedupe_;
  std::uint64_t sub_command_ = 0;
  std::uint64_t sub_interrupt_ = 0;
  std::uint64_t sub_request_ = 0;
  bool running_ = false;
  std::atomic<std::uint64_t> ticks_{0};
  std::atomic<std::uint64_t> interrupts_{0};
  std::thread loop_;
};

}  // namespace aoecr::platform
