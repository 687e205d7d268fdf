#include "aoecr/llm/remote.h"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace aoecr::llm {

namespace {

using Clock = std::chrono::steady_clock;

void set_timeouts(httplib::Client& cli, std::chrono::milliseconds budget) {
  const auto sec = budget.count() / 1000;
  const auto usec = (budget.count() % 1000) * 1000;
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  // Split "http://host:port/path" into the client base and the request path.
  const auto scheme = config_.endpoint.find("://");
  const auto path_start =
      config_.endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = config_.endpoint;
    path_ = "/v1/chat/completions";
  } else {
    scheme_host_port_ = config_.endpoint.substr(0, path_start);
    path_ = config_.endpoint.substr(path_start);
  }
}

Completion RemoteBackend::complete(std::span<const ChatMessage> messages) {
  if (auto err = check_messages(messages)) return unexpected(*err);

  nlohmann::json body = config_.sampling.is_object() ? config_.sampling : nlohmann::json::object();
  body["model"] = config_.model;
  body["stream"] = false;
  auto& msgs = body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  const auto payload = body.dump();

  httplib::Headers headers;
  if (const char* token = std::getenv(config_.token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const auto deadline = Clock::now() + config_.timeout;
  auto backoff = config_.backoff;
  BackendError last{BackendError::Kind::kTransport, "no attempt made"};
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) {
      return unexpected(BackendError{BackendError::Kind::kTimeout, "budget exhausted"});
    }
    httplib::Client cli(scheme_host_port_);
    set_timeouts(cli, remaining);
    const auto started = Clock::now();
    auto res = cli.Post(path_, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timed_out =
          err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && Clock::now() - started >= remaining * 9 / 10);
      if (timed_out) {
        return unexpected(BackendError{BackendError::Kind::kTimeout, httplib::to_string(err)});
      }
      last = {BackendError::Kind::kTransport, httplib::to_string(err)};
    } else if (res->status >= 500) {
      last = {BackendError::Kind::kTransport, "HTTP " + std::to_string(res->status)};
    } else if (res->status != 200) {
      return unexpected(
          BackendError{BackendError::Kind::kTransport, "HTTP " + std::to_string(res->status)});
    } else {
      try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        return unexpected(
            BackendError{BackendError::Kind::kTransport, std::string("bad response: ") + e.what()});
      }
    }
    if (attempt == config_.max_retries) break;
    spdlog::warn("remote backend attempt {} failed: {}", attempt + 1, last.message());
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left <= backoff) break;
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
  return unexpected(last);
}

}  // namespace aoecr::llm
