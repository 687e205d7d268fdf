#include "aoecr/platform/server.h"

#include <deque>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "aoecr/expert/equalizer.h"
#include "aoecr/platform/session_store.h"

namespace aoecr::platform {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

namespace {

constexpr std::size_t kMaxQueuedFrames = 1024;

Response json_response(const Request& req, http::status status, const nlohmann::json& body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

Response error_response(const Request& req, http::status status, std::string message) {
  return json_response(req, status, {{"error", std::move(message)}});
}

std::vector<std::string> path_segments(std::string_view target) {
  target = target.substr(0, target.find('?'));
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < target.size()) {
    if (target[i] == '/') {
      ++i;
      continue;
    }
    const auto j = target.find('/', i);
    out.emplace_back(target.substr(i, j == std::string_view::npos ? target.npos : j - i));
    if (j == std::string_view::npos) break;
    i = j;
  }
  return out;
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s-%012llx",
                static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
  return buf;
}

}  // namespace

class WsSession;

struct ServerState {
  ServerState(BrokerPtr b, std::filesystem::path dir, ServerConfig c)
      : broker(std::move(b)), store(std::move(dir)), config(std::move(c)) {}

  BrokerPtr broker;
  SessionStore store;
  ServerConfig config;
  SeqCounter seq;
  std::mutex mu;
  std::set<std::string> sessions;
  std::mutex post_mu;
  bool stopping = false;
  std::set<std::uint64_t> ws_subs;

  bool known(const std::string& id) {
    if (!valid_session_id(id)) return false;
    {
      std::lock_guard lock(mu);
      if (sessions.count(id)) return true;
    }
    return store.exists(id);
  }

  Expected<std::uint64_t, std::string> publish(const std::string& id, std::string_view kind,
                                               nlohmann::json payload) {
    auto e = make_envelope(seq, id, kind, std::move(payload));
    const auto s = e.seq;
    if (auto r = broker->publish(std::move(e)); !r) return unexpected(r.error().message);
    return s;
  }

  Response handle(const Request& req);
};

Response ServerState::handle(const Request& req) {
  if (req.method() == http::verb::options) {
    Response res{http::status::no_content, req.version()};
    res.set(http::field::access_control_allow_origin, "*");
    res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
    res.keep_alive(req.keep_alive());
    res.prepare_payload();
    return res;
  }

  const auto seg = path_segments(std::string_view(req.target().data(), req.target().size()));
  const bool get = req.method() == http::verb::get;
  const bool post = req.method() == http::verb::post;

  if (seg.size() == 2 && seg[0] == "api" && seg[1] == "health" && get) {
    return json_response(req, http::status::ok, {{"broker", broker->connected()}});
  }
  if (seg.size() == 2 && seg[0] == "api" && seg[1] == "topics" && get) {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& t : topic_contract()) {
      table.push_back({{"topic", topic_for("{session}", t.kind)},
                       {"producer", t.producer},
                       {"consumer", t.consumer},
                       {"payload", t.payload}});
    }
    return json_response(req, http::status::ok, table);
  }
  if (seg.empty() || seg[0] != "api" || seg.size() < 2 || seg[1] != "session") {
    return error_response(req, http::status::not_found, "no such endpoint");
  }

  nlohmann::json body = nlohmann::json::object();
  if (post && !req.body().empty()) {
    body = nlohmann::json::parse(req.body(), nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      return error_response(req, http::status::unprocessable_entity, "body must be a JSON object");
    }
  }

  if (seg.size() == 2) {
    if (!post) return error_response(req, http::status::method_not_allowed, "use POST");
    std::string id = new_session_id();
    if (body.contains("session_id")) {
      if (!body["session_id"].is_string() || !valid_session_id(body["session_id"].get<std::string>())) {
        return error_response(req, http::status::unprocessable_entity,
                              "session_id must be 1-64 characters of [A-Za-z0-9_-]");
      }
      id = body["session_id"].get<std::string>();
    }
    if (auto r = store.create(id); !r) {
      return error_response(req, http::status::internal_server_error, r.error());
    }
    {
      std::lock_guard lock(mu);
      sessions.insert(id);
    }
    return json_response(req, http::status::created, {{"session_id", id}});
  }

  const auto& id = seg[2];
  if (!known(id)) return error_response(req, http::status::not_found, "unknown session");
  if (seg.size() != 4) return error_response(req, http::status::not_found, "no such endpoint");
  const auto& action = seg[3];

  if (action == "log") {
    if (!get) return error_response(req, http::status::method_not_allowed, "use GET");
    return json_response(req, http::status::ok, {{"session_id", id}, {"events", store.read(id)}});
  }
  if (action != "request" && action != "interrupt" && action != "feedback") {
    return error_response(req, http::status::not_found, "no such endpoint");
  }
  if (!post) return error_response(req, http::status::method_not_allowed, "use POST");

  nlohmann::json payload;
  std::string_view kind;
  if (action == "request") {
    if (!body.contains("text") || !body["text"].is_string() || body["text"].get<std::string>().empty()) {
      return error_response(req, http::status::unprocessable_entity, "'text' must be a non-empty string");
    }
    kind = topics::kRequest;
    payload = {{"text", body["text"]}};
  } else if (action == "interrupt") {
    kind = topics::kInterrupt;
    payload = {{"reason", body.value("reason", std::string("patient"))}};
  } else {
    if (!body.contains("scores") || !expert::scores_from_json(body["scores"])) {
      return error_response(req, http::status::unprocessable_entity,
                            "'scores' must map all eight metrics to 1..5");
    }
    kind = topics::kFeedback;
    payload = {{"scores", body["scores"]}};
  }
  if (!broker->connected()) {
    return error_response(req, http::status::service_unavailable, "broker unavailable");
  }
  // The request id is fixed before publishing so the reply can be matched.
  std::string request_id;
  if (kind == topics::kRequest) {
    static std::atomic<std::uint64_t> counter{0};
    request_id = id + "-r" + std::to_string(++counter) + "-" + std::to_string(now_ms());
    payload["request_id"] = request_id;
  }
  auto seq_no = publish(id, kind, std::move(payload));
  if (!seq_no) return error_response(req, http::status::service_unavailable, seq_no.error());
  nlohmann::json reply{{"seq", *seq_no}};
  if (!request_id.empty()) reply["request_id"] = request_id;
  return json_response(req, http::status::accepted, reply);
}

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, std::shared_ptr<ServerState> impl, std::string session)
      : ws_(std::move(socket)), impl_(std::move(impl)), session_(std::move(session)) {}

  ~WsSession() {
    for (auto id : subs_) {
      impl_->broker->unsubscribe(id);
      std::lock_guard lock(impl_->post_mu);
      impl_->ws_subs.erase(id);
    }
  }

  void run(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsSession> weak = weak_from_this();
    auto impl = impl_;
    auto executor = ws_.get_executor();
    auto forward = [weak, impl, executor](const WireEnvelope& e) {
      std::lock_guard lock(impl->post_mu);
      if (impl->stopping) return;
      auto self = weak.lock();
      if (!self) return;
      net::post(executor, [self, text = encode(e)]() mutable { self->deliver(std::move(text)); });
    };
    for (auto kind : {topics::kDecision, topics::kTelemetry}) {
      const auto id = impl_->broker->subscribe(topic_for(session_, kind), forward);
      subs_.push_back(id);
      std::lock_guard lock(impl_->post_mu);
      impl_->ws_subs.insert(id);
    }
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;  // closed; the session ends when the last handler releases it
      self->buffer_.consume(self->buffer_.size());
      self->do_read();
    });
  }

  void deliver(std::string text) {
    if (queue_.size() >= kMaxQueuedFrames) queue_.pop_front();
    queue_.push_back(std::move(text));
    if (!writing_) do_write();
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->writing_ = false;
                      if (ec) return;
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->do_write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::shared_ptr<ServerState> impl_;
  std::string session_;
  std::vector<std::uint64_t> subs_;
  std::deque<std::string> queue_;
  bool writing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, std::shared_ptr<ServerState> impl)
      : stream_(std::move(socket)), impl_(std::move(impl)) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->do_read(); });
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      const auto seg =
          path_segments(std::string_view(req_.target().data(), req_.target().size()));
      if (seg.size() == 4 && seg[0] == "api" && seg[1] == "session" && seg[3] == "stream" &&
          impl_->known(seg[2])) {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), impl_, seg[2])->run(std::move(req_));
        return;
      }
      send(error_response(req_, http::status::not_found, "unknown stream"));
      return;
    }
    Response res;
    try {
      res = impl_->handle(req_);
    } catch (const std::exception& e) {
      spdlog::error("handler failed: {}", e.what());
      res = error_response(req_, http::status::internal_server_error, "internal error");
    }
    send(std::move(res));
  }

  void send(Response res) {
    auto sp = std::make_shared<Response>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!sp->keep_alive()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  Request req_;
  std::shared_ptr<ServerState> impl_;
};

struct PlatformServer::Runtime {
  net::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::vector<std::thread> threads;
  std::uint16_t port = 0;
};

namespace {

void do_accept(tcp::acceptor& acceptor, net::io_context& ioc, std::shared_ptr<ServerState> state) {
  acceptor.async_accept(net::make_strand(ioc), [&acceptor, &ioc, state](beast::error_code ec,
                                                                        tcp::socket socket) {
    if (ec == net::error::operation_aborted || !acceptor.is_open()) return;
    if (ec) {
      spdlog::warn("accept failed: {}", ec.message());
    } else {
      std::make_shared<HttpSession>(std::move(socket), state)->run();
    }
    do_accept(acceptor, ioc, state);
  });
}

}  // namespace

PlatformServer::PlatformServer(BrokerPtr broker, std::filesystem::path store_dir,
                               ServerConfig config)
    : state_(std::make_shared<ServerState>(std::move(broker), std::move(store_dir),
                                           std::move(config))) {}

PlatformServer::~PlatformServer() { stop(); }

Expected<std::uint16_t, std::string> PlatformServer::start(int threads) {
  if (rt_) return unexpected(std::string("already started"));
  auto rt = std::make_unique<Runtime>();
  beast::error_code ec;
  const auto address = net::ip::make_address(state_->config.host, ec);
  if (ec) return unexpected("bad bind address '" + state_->config.host + "': " + ec.message());
  tcp::endpoint endpoint{address, state_->config.port};
  rt->acceptor.emplace(net::make_strand(rt->ioc));
  auto& acc = *rt->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    return unexpected("cannot listen on " + state_->config.host + ":" +
                      std::to_string(state_->config.port) + ": " + ec.message());
  }
  rt->port = acc.local_endpoint().port();
  {
    std::lock_guard lock(state_->post_mu);
    state_->stopping = false;
  }
  do_accept(acc, rt->ioc, state_);
  for (int i = 0; i < std::max(1, threads); ++i) {
    rt->threads.emplace_back([ioc = &rt->ioc] { ioc->run(); });
  }
  spdlog::info("platform listening on {}:{}", state_->config.host, rt->port);
  port_ = rt->port;
  rt_ = std::move(rt);
  return port_;
}

void PlatformServer::stop() {
  if (!rt_) return;
  std::set<std::uint64_t> subs;
  {
    std::lock_guard lock(state_->post_mu);
    state_->stopping = true;
    subs = state_->ws_subs;
  }
  for (auto id : subs) state_->broker->unsubscribe(id);
  rt_->ioc.stop();
  for (auto& t : rt_->threads) t.join();
  beast::error_code ec;
  rt_->acceptor->close(ec);
  rt_->acceptor.reset();
  // Destroying the context releases every pending handler and its connection.
  rt_.reset();
}

std::uint16_t PlatformServer::port() const { return port_; }

}  // namespace aoecr::platform
