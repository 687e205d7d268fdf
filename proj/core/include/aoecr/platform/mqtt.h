#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aoecr/platform/broker.h"
#include "aoecr/util/expected.h"

namespace aoecr::platform {

namespace mqtt {

enum class PacketType : std::uint8_t {
  kConnect = 1,
  kConnack = 2,
  kPublish = 3,
  kPuback = 4,
  kSubscribe = 8,
  kSuback = 9,
  kUnsubscribe = 10,
  kUnsuback = 11,
  kPingreq = 12,
  kPingresp = 13,
  kDisconnect = 14,
};

struct Packet {
  PacketType type = PacketType::kPingreq;
  std::uint8_t flags = 0;  // low nibble of the fixed header
  std::string body;        // variable header + payload
};

std::string encode_packet(const Packet& p);

/// Decodes one packet from the front of `buffer`. Returns nullopt when more
/// bytes are needed; `consumed` is set on success.
Expected<std::optional<Packet>, std::string> decode_packet(std::string_view buffer,
                                                           std::size_t& consumed);

Packet connect_packet(std::string_view client_id, std::uint16_t keepalive_s);
Packet publish_packet(std::string_view topic, std::string_view payload, std::uint16_t packet_id);
Packet subscribe_packet(std::uint16_t packet_id, const std::vector<std::string>& filters);
Packet unsubscribe_packet(std::uint16_t packet_id, const std::vector<std::string>& filters);

struct PublishFields {
  std::string topic;
  std::uint16_t packet_id = 0;
  std::uint8_t qos = 0;
  std::string payload;
};
Expected<PublishFields, std::string> parse_publish(const Packet& p);

}  // namespace mqtt

struct MqttClientConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 1883;
  std::string client_id = "aoecr";
  std::uint16_t keepalive_s = 30;
  int reconnect_attempts = 10;
  std::chrono::milliseconds reconnect_backoff{200};
};

/// Broker interface over an MQTT 3.1.1 connection. Envelopes travel as JSON
/// payloads with QoS 1; receivers deduplicate on seq. Lost connections are
/// retried a bounded number of times and subscriptions are restored.
class MqttClientBroker final : public Broker {
 public:
  static Expected<std::shared_ptr<MqttClientBroker>, std::string> connect(MqttClientConfig config);
  ~MqttClientBroker() override;

  std::uint64_t subscribe(std::string filter, Handler handler) override;
  void unsubscribe(std::uint64_t id) override;
  Expected<bool, BrokerError> publish(WireEnvelope envelope) override;
  bool connected() const override { return connected_.load(); }

  void close();

 private:
  struct Connection;
  explicit MqttClientBroker(MqttClientConfig config);
  Expected<bool, std::string> open();
  bool send(const mqtt::Packet& p);
  std::uint16_t next_packet_id();
  void reader();
  void pinger();

  MqttClientConfig config_;
  std::unique_ptr<Connection> conn_;
  std::mutex write_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, std::pair<std::string, std::shared_ptr<Handler>>> subs_;
  std::uint64_t next_sub_ = 1;
  std::uint16_t next_packet_ = 1;
  std::atomic<bool> connected_{false};
  std::atomic<bool> closing_{false};
  std::thread reader_;
  std::thread pinger_;
};

/// Minimal MQTT 3.1.1 listener bridging TCP clients onto a local broker, so
/// agent and bed processes can share the platform's topics.
class MqttListener {
 public:
  MqttListener(BrokerPtr local, std::string host = "127.0.0.1", std::uint16_t port = 1883);
  ~MqttListener();

  MqttListener(const MqttListener&) = delete;
  MqttListener& operator=(const MqttListener&) = delete;

  Expected<std::uint16_t, std::string> start();
  void stop();
  std::uint16_t port() const { return port_; }
  std::size_t clients() const;

 private:
  struct Client;
  struct Net;
  void accept_loop();
  void serve(const std::shared_ptr<Client>& c);

  BrokerPtr local_;
  std::string host_;
  std::uint16_t port_;
  std::unique_ptr<Net> net_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Client>> clients_;
  std::vector<std::thread> threads_;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
};

}  // namespace aoecr::platform
