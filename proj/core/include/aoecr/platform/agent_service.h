#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "aoecr/cos/pipeline.h"
#include "aoecr/llm/backend.h"
#include "aoecr/platform/broker.h"
#include "aoecr/platform/session_store.h"

namespace aoecr::platform {

struct AgentServiceConfig {
  cos::PipelineOptions pipeline;
  std::chrono::milliseconds deadline{30000};
  std::filesystem::path store_dir = "sessions";
  double feedback_rate = expert::kDefaultFeedbackRate;
  int publish_attempts = 5;
  std::chrono::milliseconds publish_backoff{100};
};

/// Cloud agent runtime. Requests and feedback are processed strictly in order
/// per session on that session's worker; sessions run in parallel.
class AgentService {
 public:
  /// `expert` may be null, in which case responses are not optimized.
  AgentService(BrokerPtr broker, llm::BackendPtr backend, llm::BackendPtr expert,
               AgentServiceConfig config = {});
  ~AgentService();

  AgentService(const AgentService&) = delete;
  AgentService& operator=(const AgentService&) = delete;

  void start();
  void stop();

  /// Blocks until every accepted request and feedback has been handled.
  void drain();

  EqualizerState equalizer(const std::string& session_id);
  SessionStore& store() { return store_; }
  std::uint64_t decisions() const { return decisions_.load(); }

 private:
  struct Session {
    std::string id;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<WireEnvelope> jobs;
    cos::SessionContext ctx;
    EqualizerState eq;
    bool busy = false;
    std::thread worker;
  };

  std::shared_ptr<Session> session(const std::string& id);
  void enqueue(const WireEnvelope& e);
  void on_telemetry(const WireEnvelope& e);
  void on_interrupt(const WireEnvelope& e);
  void work(const std::shared_ptr<Session>& s);
  void handle_request(Session& s, const WireEnvelope& e);
  void handle_feedback(Session& s, const WireEnvelope& e);
  void publish(std::string_view session_id, std::string_view kind, nlohmann::json payload);
  void job_done();

  BrokerPtr broker_;
  std::shared_ptr<cos::CosPipeline> pipeline_;
  llm::BackendPtr expert_;
  AgentServiceConfig config_;
  SessionStore store_;
  SeqCounter seq_;
  Deduplicator dedupe_;

  std::mutex mu_;
  std::condition_variable idle_cv_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t outstanding_ = 0;
  bool running_ = false;
  std::vector<std::uint64_t> subs_;
  std::atomic<std::uint64_t> decisions_{0};
};

}  // namespace aoecr::platform
