#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "aoecr/platform/broker.h"
#include "aoecr/platform/config.h"
#include "aoecr/util/expected.h"

namespace aoecr::platform {

struct ServerState;

/// HTTP/WS bridge between the console and the pub/sub topics.
///
///   POST /api/session                 -> 201 {"session_id"}
///   POST /api/session/{id}/request    {"text"}    -> 202 {"request_id", "seq"}
///   POST /api/session/{id}/interrupt  {"reason"?} -> 202 {"seq"}
///   POST /api/session/{id}/feedback   {"scores"}  -> 202 {"seq"}
///   GET  /api/session/{id}/log        -> 200 {"session_id", "events"}
///   GET  /api/session/{id}/stream     WebSocket: decision and telemetry envelopes
///   GET  /api/health                  -> 200 {"broker"}
///   GET  /api/topics                  -> 200 topic table
///
/// Errors: 404 unknown session, 422 malformed body, 503 broker down.
class PlatformServer {
 public:
  PlatformServer(BrokerPtr broker, std::filesystem::path store_dir, ServerConfig config = {});
  ~PlatformServer();

  PlatformServer(const PlatformServer&) = delete;
  PlatformServer& operator=(const PlatformServer&) = delete;

  /// Binds and starts serving; returns the bound port (useful with port 0).
  Expected<std::uint16_t, std::string> start(int threads = 2);
  void stop();

  std::uint16_t port() const;

 private:
  struct Runtime;
  std::shared_ptr<ServerState> state_;
  std::unique_ptr<Runtime> rt_;
  std::uint16_t port_ = 0;
};

}  // namespace aoecr::platform
