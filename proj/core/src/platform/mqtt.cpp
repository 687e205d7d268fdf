#include "aoecr/platform/mqtt.h"

#include <sys/socket.h>

#include <algorithm>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/write.hpp>
#include <spdlog/spdlog.h>

namespace aoecr::platform {

namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace mqtt {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_str(std::string& out, std::string_view s) {
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.append(s);
}

std::optional<std::uint16_t> get_u16(std::string_view in, std::size_t& pos) {
  if (pos + 2 > in.size()) return std::nullopt;
  const auto v = static_cast<std::uint16_t>((static_cast<std::uint8_t>(in[pos]) << 8) |
                                            static_cast<std::uint8_t>(in[pos + 1]));
  pos += 2;
  return v;
}

std::optional<std::string> get_str(std::string_view in, std::size_t& pos) {
  auto len = get_u16(in, pos);
  if (!len || pos + *len > in.size()) return std::nullopt;
  std::string s(in.substr(pos, *len));
  pos += *len;
  return s;
}

}  // namespace

std::string encode_packet(const Packet& p) {
  std::string out;
  out.push_back(static_cast<char>((static_cast<std::uint8_t>(p.type) << 4) | (p.flags & 0x0f)));
  std::size_t len = p.body.size();
  do {
    std::uint8_t byte = len % 128;
    len /= 128;
    if (len > 0) byte |= 0x80;
    out.push_back(static_cast<char>(byte));
  } while (len > 0);
  out += p.body;
  return out;
}

Expected<std::optional<Packet>, std::string> decode_packet(std::string_view buffer,
                                                           std::size_t& consumed) {
  if (buffer.size() < 2) return std::optional<Packet>{};
  std::size_t len = 0;
  std::size_t multiplier = 1;
  std::size_t pos = 1;
  while (true) {
    if (pos >= buffer.size()) return std::optional<Packet>{};
    const auto byte = static_cast<std::uint8_t>(buffer[pos++]);
    len += (byte & 0x7f) * multiplier;
    if ((byte & 0x80) == 0) break;
    multiplier *= 128;
    if (pos > 4) return unexpected(std::string("malformed remaining length"));
  }
  if (buffer.size() < pos + len) return std::optional<Packet>{};
  Packet p;
  const auto head = static_cast<std::uint8_t>(buffer[0]);
  const auto type = head >> 4;
  if (type < 1 || type > 14) return unexpected("unsupported packet type " + std::to_string(type));
  p.type = static_cast<PacketType>(type);
  p.flags = head & 0x0f;
  p.body = std::string(buffer.substr(pos, len));
  consumed = pos + len;
  return std::optional<Packet>(std::move(p));
}

Packet connect_packet(std::string_view client_id, std::uint16_t keepalive_s) {
  Packet p{PacketType::kConnect, 0, {}};
  put_str(p.body, "MQTT");
  p.body.push_back(4);     // protocol level 3.1.1
  p.body.push_back(0x02);  // clean session
  put_u16(p.body, keepalive_s);
  put_str(p.body, client_id);
  return p;
}

Packet publish_packet(std::string_view topic, std::string_view payload, std::uint16_t packet_id) {
  Packet p{PacketType::kPublish, 0x02, {}};  // QoS 1
  put_str(p.body, topic);
  put_u16(p.body, packet_id);
  p.body.append(payload);
  return p;
}

Packet subscribe_packet(std::uint16_t packet_id, const std::vector<std::string>& filters) {
  Packet p{PacketType::kSubscribe, 0x02, {}};
  put_u16(p.body, packet_id);
  for (const auto& f : filters) {
    put_str(p.body, f);
    p.body.push_back(1);
  }
  return p;
}

Packet unsubscribe_packet(std::uint16_t packet_id, const std::vector<std::string>& filters) {
  Packet p{PacketType::kUnsubscribe, 0x02, {}};
  put_u16(p.body, packet_id);
  for (const auto& f : filters) put_str(p.body, f);
  return p;
}

Expected<PublishFields, std::string> parse_publish(const Packet& p) {
  PublishFields f;
  std::size_t pos = 0;
  auto topic = get_str(p.body, pos);
  if (!topic) return unexpected(std::string("publish without topic"));
  f.topic = std::move(*topic);
  f.qos = (p.flags >> 1) & 0x03;
  if (f.qos > 0) {
    auto id = get_u16(p.body, pos);
    if (!id) return unexpected(std::string("publish without packet id"));
    f.packet_id = *id;
  }
  f.payload = p.body.substr(pos);
  return f;
}

}  // namespace mqtt

namespace {

void hard_shutdown(tcp::socket& s) {
  if (s.is_open()) ::shutdown(s.native_handle(), SHUT_RDWR);
}

// Reads until one full packet is buffered.
Expected<mqtt::Packet, std::string> read_packet(tcp::socket& sock, std::string& buffer) {
  while (true) {
    std::size_t consumed = 0;
    auto decoded = mqtt::decode_packet(buffer, consumed);
    if (!decoded) return unexpected(decoded.error());
    if (*decoded) {
      buffer.erase(0, consumed);
      return std::move(**decoded);
    }
    char chunk[4096];
    boost::system::error_code ec;
    const auto n = sock.read_some(net::buffer(chunk), ec);
    if (ec) return unexpected(ec.message());
    buffer.append(chunk, n);
  }
}

mqtt::Packet ack(mqtt::PacketType type, std::uint16_t id) {
  mqtt::Packet p{type, 0, {}};
  p.body.push_back(static_cast<char>(id >> 8));
  p.body.push_back(static_cast<char>(id & 0xff));
  return p;
}

}  // namespace

// --- client ------------------------------------------------------------------

struct MqttClientBroker::Connection {
  net::io_context ioc;
  tcp::socket sock{ioc};
  std::string buffer;
};

MqttClientBroker::MqttClientBroker(MqttClientConfig config) : config_(std::move(config)) {}

Expected<std::shared_ptr<MqttClientBroker>, std::string> MqttClientBroker::connect(
    MqttClientConfig config) {
  std::shared_ptr<MqttClientBroker> b(new MqttClientBroker(std::move(config)));
  if (auto r = b->open(); !r) return unexpected(r.error());
  b->reader_ = std::thread([raw = b.get()] { raw->reader(); });
  b->pinger_ = std::thread([raw = b.get()] { raw->pinger(); });
  return b;
}

MqttClientBroker::~MqttClientBroker() { close(); }

Expected<bool, std::string> MqttClientBroker::open() {
  auto conn = std::make_unique<Connection>();
  boost::system::error_code ec;
  tcp::resolver resolver(conn->ioc);
  const auto endpoints = resolver.resolve(config_.host, std::to_string(config_.port), ec);
  if (ec) return unexpected("resolve " + config_.host + ": " + ec.message());
  net::connect(conn->sock, endpoints, ec);
  if (ec) {
    return unexpected("connect " + config_.host + ":" + std::to_string(config_.port) + ": " +
                      ec.message());
  }
  conn->sock.set_option(tcp::no_delay(true), ec);
  net::write(conn->sock, net::buffer(mqtt::encode_packet(
                             mqtt::connect_packet(config_.client_id, config_.keepalive_s))),
             ec);
  if (ec) return unexpected("send CONNECT: " + ec.message());
  auto reply = read_packet(conn->sock, conn->buffer);
  if (!reply) return unexpected("read CONNACK: " + reply.error());
  if (reply->type != mqtt::PacketType::kConnack || reply->body.size() != 2 || reply->body[1] != 0) {
    return unexpected(std::string("connection refused by broker"));
  }

  std::vector<std::string> filters;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, sub] : subs_) {
      if (std::find(filters.begin(), filters.end(), sub.first) == filters.end()) {
        filters.push_back(sub.first);
      }
    }
  }
  {
    std::lock_guard lock(write_mu_);
    conn_ = std::move(conn);
  }
  connected_ = true;
  if (!filters.empty()) send(mqtt::subscribe_packet(next_packet_id(), filters));
  return true;
}

bool MqttClientBroker::send(const mqtt::Packet& p) {
  std::lock_guard lock(write_mu_);
  if (!conn_) return false;
  boost::system::error_code ec;
  net::write(conn_->sock, net::buffer(mqtt::encode_packet(p)), ec);
  return !ec;
}

std::uint16_t MqttClientBroker::next_packet_id() {
  std::lock_guard lock(mu_);
  if (next_packet_ == 0) next_packet_ = 1;
  return next_packet_++;
}

std::uint64_t MqttClientBroker::subscribe(std::string filter, Handler handler) {
  bool fresh = true;
  std::uint64_t id = 0;
  {
    std::lock_guard lock(mu_);
    for (const auto& [other, sub] : subs_) {
      if (sub.first == filter) fresh = false;
    }
    id = next_sub_++;
    subs_.emplace(id, std::make_pair(filter, std::make_shared<Handler>(std::move(handler))));
  }
  if (fresh && connected_) send(mqtt::subscribe_packet(next_packet_id(), {filter}));
  return id;
}

void MqttClientBroker::unsubscribe(std::uint64_t id) {
  std::string filter;
  bool last = true;
  {
    std::lock_guard lock(mu_);
    auto it = subs_.find(id);
    if (it == subs_.end()) return;
    filter = it->second.first;
    subs_.erase(it);
    for (const auto& [other, sub] : subs_) {
      if (sub.first == filter) last = false;
    }
  }
  if (last && connected_) send(mqtt::unsubscribe_packet(next_packet_id(), {filter}));
}

Expected<bool, BrokerError> MqttClientBroker::publish(WireEnvelope envelope) {
  if (!connected_) return unexpected(BrokerError{"mqtt broker not connected"});
  if (!send(mqtt::publish_packet(envelope.topic, encode(envelope), next_packet_id()))) {
    return unexpected(BrokerError{"mqtt write failed"});
  }
  return true;
}

void MqttClientBroker::reader() {
  while (!closing_) {
    Connection* conn = nullptr;
    {
      std::lock_guard lock(write_mu_);
      conn = conn_.get();
    }
    auto packet = conn ? read_packet(conn->sock, conn->buffer)
                       : Expected<mqtt::Packet, std::string>(unexpected(std::string("no connection")));
    if (!packet) {
      connected_ = false;
      if (closing_) return;
      spdlog::warn("mqtt connection lost: {}", packet.error());
      auto backoff = config_.reconnect_backoff;
      bool restored = false;
      for (int attempt = 1; attempt <= config_.reconnect_attempts && !closing_; ++attempt) {
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, std::chrono::milliseconds(5000));
        if (auto r = open(); r) {
          spdlog::info("mqtt reconnected after {} attempt(s)", attempt);
          restored = true;
          break;
        }
      }
      if (!restored) {
        spdlog::error("mqtt reconnect gave up after {} attempts", config_.reconnect_attempts);
        return;
      }
      continue;
    }
    if (packet->type != mqtt::PacketType::kPublish) continue;
    auto fields = mqtt::parse_publish(*packet);
    if (!fields) continue;
    if (fields->qos == 1) send(ack(mqtt::PacketType::kPuback, fields->packet_id));
    auto envelope = decode(fields->payload);
    if (!envelope) {
      spdlog::warn("dropping non-envelope payload on {}", fields->topic);
      continue;
    }
    std::vector<std::shared_ptr<Handler>> targets;
    {
      std::lock_guard lock(mu_);
      for (const auto& [id, sub] : subs_) {
        if (topic_matches(sub.first, envelope->topic)) targets.push_back(sub.second);
      }
    }
    for (const auto& h : targets) (*h)(*envelope);
  }
}

void MqttClientBroker::pinger() {
  const auto period = std::chrono::seconds(std::max<int>(1, config_.keepalive_s / 2));
  std::unique_lock lock(mu_);
  while (!closing_) {
    cv_.wait_for(lock, period, [this] { return closing_.load(); });
    if (closing_) return;
    lock.unlock();
    if (connected_) send(mqtt::Packet{mqtt::PacketType::kPingreq, 0, {}});
    lock.lock();
  }
}

void MqttClientBroker::close() {
  if (closing_.exchange(true)) return;
  if (connected_) send(mqtt::Packet{mqtt::PacketType::kDisconnect, 0, {}});
  connected_ = false;
  {
    std::lock_guard lock(write_mu_);
    if (conn_) hard_shutdown(conn_->sock);
  }
  {
    std::lock_guard lock(mu_);
  }
  cv_.notify_all();
  if (reader_.joinable()) reader_.join();
  if (pinger_.joinable()) pinger_.join();
}

// --- listener ----------------------------------------------------------------

struct MqttListener::Net {
  net::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
};

struct MqttListener::Client {
  explicit Client(tcp::socket s) : sock(std::move(s)) {}
  tcp::socket sock;
  std::mutex write_mu;
  std::mutex subs_mu;
  std::vector<std::pair<std::string, std::uint64_t>> subs;
  std::atomic<std::uint16_t> next_id{1};

  bool write(const mqtt::Packet& p) {
    std::lock_guard lock(write_mu);
    boost::system::error_code ec;
    net::write(sock, net::buffer(mqtt::encode_packet(p)), ec);
    return !ec;
  }
};

MqttListener::MqttListener(BrokerPtr local, std::string host, std::uint16_t port)
    : local_(std::move(local)), host_(std::move(host)), port_(port), net_(std::make_unique<Net>()) {}

MqttListener::~MqttListener() { stop(); }

Expected<std::uint16_t, std::string> MqttListener::start() {
  boost::system::error_code ec;
  const auto address = net::ip::make_address(host_, ec);
  if (ec) return unexpected("bad address '" + host_ + "'");
  tcp::endpoint endpoint{address, port_};
  net_->acceptor.emplace(net_->ioc);
  auto& acc = *net_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) return unexpected("mqtt listen on " + host_ + ":" + std::to_string(port_) + ": " + ec.message());
  port_ = acc.local_endpoint().port();
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("mqtt listener on {}:{}", host_, port_);
  return port_;
}

std::size_t MqttListener::clients() const {
  std::lock_guard lock(mu_);
  return clients_.size();
}

void MqttListener::accept_loop() {
  while (!stopping_) {
    tcp::socket sock(net_->ioc);
    boost::system::error_code ec;
    net_->acceptor->accept(sock, ec);
    if (stopping_) return;
    if (ec) {
      spdlog::warn("mqtt accept: {}", ec.message());
      continue;
    }
    sock.set_option(tcp::no_delay(true), ec);
    auto client = std::make_shared<Client>(std::move(sock));
    std::lock_guard lock(mu_);
    clients_.push_back(client);
    threads_.emplace_back([this, client] { serve(client); });
  }
}

void MqttListener::serve(const std::shared_ptr<Client>& c) {
  std::string buffer;
  std::weak_ptr<Client> weak = c;
  while (!stopping_) {
    auto packet = read_packet(c->sock, buffer);
    if (!packet) break;
    bool done = false;
    switch (packet->type) {
      case mqtt::PacketType::kConnect: {
        mqtt::Packet connack{mqtt::PacketType::kConnack, 0, std::string("\0\0", 2)};
        c->write(connack);
        break;
      }
      case mqtt::PacketType::kPublish: {
        auto fields = mqtt::parse_publish(*packet);
        if (!fields) break;
        if (fields->qos == 1) c->write(ack(mqtt::PacketType::kPuback, fields->packet_id));
        auto envelope = decode(fields->payload);
        if (!envelope) break;
        if (auto r = local_->publish(std::move(*envelope)); !r) {
          spdlog::warn("mqtt bridge publish failed: {}", r.error().message);
        }
        break;
      }
      case mqtt::PacketType::kSubscribe:
      case mqtt::PacketType::kUnsubscribe: {
        const bool sub = packet->type == mqtt::PacketType::kSubscribe;
        const std::string& b = packet->body;
        if (b.size() < 2) {
          done = true;
          break;
        }
        const std::uint16_t pid = static_cast<std::uint16_t>(
            (static_cast<std::uint8_t>(b[0]) << 8) | static_cast<std::uint8_t>(b[1]));
        std::size_t pos = 2;
        std::string granted;
        while (pos + 2 <= b.size()) {
          const std::size_t len = (static_cast<std::uint8_t>(b[pos]) << 8) |
                                  static_cast<std::uint8_t>(b[pos + 1]);
          pos += 2;
          if (pos + len > b.size()) break;
          std::string filter = b.substr(pos, len);
          pos += len;
          if (sub) {
            ++pos;  // requested QoS; everything is granted QoS 1
            const auto id = local_->subscribe(filter, [weak](const WireEnvelope& e) {
              if (auto client = weak.lock()) {
                client->write(mqtt::publish_packet(e.topic, encode(e), client->next_id++));
              }
            });
            std::lock_guard lock(c->subs_mu);
            c->subs.emplace_back(filter, id);
            granted.push_back(1);
          } else {
            std::lock_guard lock(c->subs_mu);
            std::erase_if(c->subs, [&](const auto& s) {
              if (s.first != filter) return false;
              local_->unsubscribe(s.second);
              return true;
            });
          }
        }
        auto reply = ack(sub ? mqtt::PacketType::kSuback : mqtt::PacketType::kUnsuback, pid);
        reply.body += granted;
        c->write(reply);
        break;
      }
      case mqtt::PacketType::kPingreq:
        c->write(mqtt::Packet{mqtt::PacketType::kPingresp, 0, {}});
        break;
      case mqtt::PacketType::kDisconnect:
        done = true;
        break;
      default:
        break;
    }
    if (done) break;
  }
  std::lock_guard lock(c->subs_mu);
  for (const auto& [filter, id] : c->subs) local_->unsubscribe(id);
  c->subs.clear();
  hard_shutdown(c->sock);
}

void MqttListener::stop() {
  if (!acceptor_.joinable()) return;
  stopping_ = true;
  {
    // Wake the blocking accept with a throwaway connection.
    net::io_context ioc;
    tcp::socket poke(ioc);
    boost::system::error_code ec;
    poke.connect({net::ip::make_address(host_ == "0.0.0.0" ? "127.0.0.1" : host_, ec), port_}, ec);
  }
  acceptor_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    for (auto& c : clients_) hard_shutdown(c->sock);
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
  std::lock_guard lock(mu_);
  clients_.clear();
  boost::system::error_code ec;
  net_->acceptor->close(ec);
}

}  // namespace aoecr::platform
