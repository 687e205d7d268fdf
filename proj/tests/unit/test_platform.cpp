#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "aoecr/command/labels.h"
#include "aoecr/llm/oracle.h"
#include "aoecr/platform/agent_service.h"
#include "aoecr/platform/bed_service.h"
#include "aoecr/platform/broker.h"
#include "aoecr/platform/config.h"
#include "aoecr/platform/mqtt.h"
#include "aoecr/platform/session_store.h"
#include "aoecr/platform/wire.h"
#include "test_support.h"

using namespace aoecr;
using namespace aoecr::platform;
using namespace std::chrono_literals;

namespace {

// Records every envelope delivered for a filter.
class Collector {
 public:
  Collector(Broker& broker, std::string filter) : broker_(broker) {
    id_ = broker_.subscribe(std::move(filter), [this](const WireEnvelope& e) {
      std::lock_guard lock(mu_);
      got_.push_back(e);
      cv_.notify_all();
    });
  }
  ~Collector() { broker_.unsubscribe(id_); }

  bool wait_for_count(std::size_t n, std::chrono::milliseconds timeout = 5s) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return got_.size() >= n; });
  }
  std::vector<WireEnvelope> all() {
    std::lock_guard lock(mu_);
    return got_;
  }

 private:
  Broker& broker_;
  std::uint64_t id_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<WireEnvelope> got_;
};

class SlowBackend final : public llm::ChatBackend {
 public:
  explicit SlowBackend(std::chrono::milliseconds delay) : delay_(delay) {}
  llm::Completion complete(std::span<const llm::ChatMessage> messages) override {
    std::this_thread::sleep_for(delay_);
    return inner_.complete(messages);
  }
  std::string_view name() const override { return "slow"; }

 private:
  std::chrono::milliseconds delay_;
  llm::OracleBackend inner_{llm::OracleConfig{}};
};

class CountingBackend final : public llm::ChatBackend {
 public:
  llm::Completion complete(std::span<const llm::ChatMessage> messages) override {
    ++calls;
    return inner_.complete(messages);
  }
  std::string_view name() const override { return "counting"; }
  std::atomic<int> calls{0};

 private:
  llm::OracleBackend inner_{llm::OracleConfig{}};
};

nlohmann::json all_scores(int v) {
  nlohmann::json j;
  for (auto m : expert::kAllMetrics) j[std::string(expert::to_string(m))] = v;
  return j;
}

}  // namespace

TEST(Wire, TopicsAndSessionIds) {
  EXPECT_EQ(topic_for("s1", topics::kRequest), "aoecr/v1/s1/request");
  auto parts = split_topic("aoecr/v1/abc/decision");
  ASSERT_TRUE(parts);
  EXPECT_EQ(parts->session_id, "abc");
  EXPECT_EQ(parts->kind, "decision");
  EXPECT_FALSE(split_topic("aoecr/v2/abc/decision"));
  EXPECT_FALSE(split_topic("aoecr/v1/abc"));
  EXPECT_EQ(topic_contract().size(), 6u);

  EXPECT_TRUE(valid_session_id("a"));
  EXPECT_TRUE(valid_session_id("Ward-3_bed_12"));
  EXPECT_TRUE(valid_session_id(std::string(64, 'x')));
  EXPECT_FALSE(valid_session_id(""));
  EXPECT_FALSE(valid_session_id(std::string(65, 'x')));
  EXPECT_FALSE(valid_session_id("a/b"));
  EXPECT_FALSE(valid_session_id("+"));
  EXPECT_FALSE(valid_session_id("../etc"));
}

TEST(Wire, TopicMatching) {
  EXPECT_TRUE(topic_matches("aoecr/v1/+/request", "aoecr/v1/s1/request"));
  EXPECT_FALSE(topic_matches("aoecr/v1/+/request", "aoecr/v1/s1/decision"));
  EXPECT_FALSE(topic_matches("aoecr/v1/+/request", "aoecr/v1/s1/x/request"));
  EXPECT_TRUE(topic_matches("aoecr/v1/#", "aoecr/v1/s1/request"));
  EXPECT_TRUE(topic_matches("#", "a/b/c"));
  EXPECT_TRUE(topic_matches("a/b", "a/b"));
  EXPECT_FALSE(topic_matches("a/b", "a/b/c"));
  EXPECT_FALSE(topic_matches("a/+", "a"));
}

TEST(Wire, EnvelopeRoundTrip) {
  SeqCounter seq;
  auto e = make_envelope(seq, "s1", topics::kRequest, {{"text", "raise the bed"}});
  EXPECT_EQ(e.topic, "aoecr/v1/s1/request");
  EXPECT_EQ(e.seq, 1u);
  EXPECT_GT(e.ts, 0);
  auto back = decode(encode(e));
  ASSERT_TRUE(back) << back.error();
  EXPECT_EQ(back->topic, e.topic);
  EXPECT_EQ(back->session_id, e.session_id);
  EXPECT_EQ(back->seq, e.seq);
  EXPECT_EQ(back->ts, e.ts);
  EXPECT_EQ(back->payload, e.payload);
  const auto j = envelope_to_json(e);
  for (const char* k : {"topic", "session_id", "seq", "ts", "payload"}) EXPECT_TRUE(j.contains(k)) << k;

  EXPECT_FALSE(decode("not json"));
  EXPECT_FALSE(decode(R"({"topic":"aoecr/v1/s1/request"})"));
}

TEST(Wire, SeqCounterPerSessionTopic) {
  SeqCounter seq;
  EXPECT_EQ(seq.next("a", "t"), 1u);
  EXPECT_EQ(seq.next("a", "t"), 2u);
  EXPECT_EQ(seq.next("a", "u"), 1u);
  EXPECT_EQ(seq.next("b", "t"), 1u);
  EXPECT_EQ(seq.next("a", "t"), 3u);
}

TEST(Wire, DeduplicatorDropsRedelivery) {
  Deduplicator d;
  SeqCounter seq;
  auto e1 = make_envelope(seq, "s", topics::kCommand, {});
  auto e2 = make_envelope(seq, "s", topics::kCommand, {});
  EXPECT_TRUE(d.accept(e1));
  EXPECT_FALSE(d.accept(e1));
  EXPECT_TRUE(d.accept(e2));
  EXPECT_FALSE(d.accept(e1));
  auto other = make_envelope(seq, "t", topics::kCommand, {});
  EXPECT_TRUE(d.accept(other));
}

TEST(InProcessBroker, DeliversInPublishOrder) {
  auto broker = std::make_shared<InProcessBroker>();
  Collector all(*broker, "aoecr/v1/+/request");
  Collector one(*broker, topic_for("s2", topics::kRequest));
  SeqCounter seq;
  for (int i = 0; i < 100; ++i) {
    ASSERT_TRUE(broker->publish(make_envelope(seq, i % 2 ? "s1" : "s2", topics::kRequest, {{"i", i}})));
  }
  broker->drain();
  const auto got = all.all();
  ASSERT_EQ(got.size(), 100u);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(got[i].payload["i"], i);
  EXPECT_EQ(one.all().size(), 50u);
  EXPECT_EQ(broker->published(), 100u);
}

TEST(InProcessBroker, OutageFailsPublish) {
  auto broker = std::make_shared<InProcessBroker>();
  SeqCounter seq;
  broker->set_connected(false);
  EXPECT_FALSE(broker->connected());
  EXPECT_FALSE(broker->publish(make_envelope(seq, "s", topics::kRequest, {})));
  broker->set_connected(true);
  EXPECT_TRUE(broker->publish(make_envelope(seq, "s", topics::kRequest, {})));
}

TEST(InProcessBroker, UnsubscribeStopsDelivery) {
  auto broker = std::make_shared<InProcessBroker>();
  int n = 0;
  auto id = broker->subscribe("#", [&](const WireEnvelope&) { ++n; });
  SeqCounter seq;
  (void)broker->publish(make_envelope(seq, "s", topics::kRequest, {}));
  broker->drain();
  broker->unsubscribe(id);
  (void)broker->publish(make_envelope(seq, "s", topics::kRequest, {}));
  broker->drain();
  EXPECT_EQ(n, 1);
}

TEST(SessionStore, AppendReadAndIndex) {
  testkit::TempDir dir("store");
  SessionStore store(dir.path());
  for (int i = 0; i < 5; ++i) ASSERT_TRUE(store.append("s1", {{"type", "request"}, {"i", i}}));
  const auto log = store.read("s1");
  ASSERT_EQ(log.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(log[i]["index"], i);
    EXPECT_EQ(log[i]["i"], i);
    EXPECT_TRUE(log[i].contains("ts"));
  }
  EXPECT_FALSE(store.append("../x", {}));
  EXPECT_TRUE(store.exists("s1"));
  EXPECT_FALSE(store.exists("s2"));
  ASSERT_TRUE(store.create("s2"));
  EXPECT_EQ(store.sessions(), (std::vector<std::string>{"s1", "s2"}));

  // A second store continues the index.
  SessionStore again(dir.path());
  ASSERT_TRUE(again.append("s1", {{"type", "request"}}));
  EXPECT_EQ(again.read("s1").back()["index"], 5);
}

TEST(SessionStore, TornLastLineSkipped) {
  testkit::TempDir dir("store");
  SessionStore store(dir.path());
  ASSERT_TRUE(store.append("s", {{"type", "feedback"}}));
  {
    std::ofstream out(dir.path() / "s.jsonl", std::ios::app);
    out << R"({"type":"feed)";
  }
  EXPECT_EQ(store.read("s").size(), 1u);
}

TEST(SessionStore, EqualizerSnapshotBitExact) {
  testkit::TempDir dir("store");
  SessionStore store(dir.path());
  EqualizerState s;
  expert::MetricVector v;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    for (auto& x : v.s) x = std::uniform_int_distribution<int>(1, 5)(rng);
    s.weights = expert::update_equalizer(s.weights, v, 0.2);
    ++s.update_count;
  }
  ASSERT_TRUE(store.save_equalizer("s", s));
  auto back = store.load_equalizer("s");
  ASSERT_TRUE(back);
  EXPECT_EQ(back->weights, s.weights);
  EXPECT_EQ(back->update_count, 20u);
  EXPECT_FALSE(store.load_equalizer("none"));
}

TEST(SessionStore, ReplayMatchesDirectUpdates) {
  std::vector<nlohmann::json> log;
  expert::EqualizerWeights w = expert::EqualizerWeights::uniform();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 30; ++i) {
    expert::MetricVector v;
    for (auto& x : v.s) x = std::uniform_int_distribution<int>(1, 5)(rng);
    w = expert::update_equalizer(w, v, 0.2);
    log.push_back({{"type", "request"}, {"text", "x"}});
    log.push_back({{"type", "feedback"}, {"scores", expert::scores_to_json(v)}, {"rate", 0.2}});
  }
  log.push_back({{"type", "feedback"}, {"scores", {{"empathy", 9}}}});
  const auto s = replay_equalizer(log);
  EXPECT_EQ(s.weights, w);
  EXPECT_EQ(s.update_count, 30u);
}

TEST(Config, DefaultsProduceRuntimeConfig) {
  auto rc = runtime_config(Config::defaults());
  ASSERT_TRUE(rc) << rc.error().what();
  EXPECT_EQ(rc->backend.kind, llm::BackendConfig::Kind::kOracle);
  EXPECT_EQ(rc->bed.tick, 100ms);
  EXPECT_EQ(rc->agent.pipeline.max_revisions, 2);
  EXPECT_DOUBLE_EQ(rc->agent.pipeline.degrees.fraction_for("a_bit"), 0.40);
  EXPECT_EQ(rc->server.port, 8080);
}

TEST(Config, ShippedDefaultFileMatchesSchema) {
  auto c = Config::load(std::string(AOECR_GOLDEN_DIR) + "/../../configs/default.conf");
  ASSERT_TRUE(c) << c.error().what();
  for (const auto& k : config_schema()) EXPECT_EQ(c->get(k.key), k.default_value) << k.key;
}

TEST(Config, ErrorsCarryPathAndLine) {
  auto bad = Config::parse("# comment\nllm.backend = oracle\nllm.colour = red\n", "x.conf");
  ASSERT_FALSE(bad);
  EXPECT_EQ(bad.error().what(), "x.conf:3: unknown key 'llm.colour'");

  auto noeq = Config::parse("\n\njust words\n", "y.conf");
  ASSERT_FALSE(noeq);
  EXPECT_EQ(noeq.error().line, 3);

  auto c = Config::parse("agent.max_revisions = many\n", "z.conf");
  ASSERT_TRUE(c);
  auto rc = runtime_config(*c);
  ASSERT_FALSE(rc);
  EXPECT_EQ(rc.error().source, "z.conf");
  EXPECT_EQ(rc.error().line, 1);
  EXPECT_NE(rc.error().message.find("agent.max_revisions"), std::string::npos);

  auto range = Config::parse("oracle.corruption = 0,0,2,0\n");
  ASSERT_TRUE(range);
  EXPECT_FALSE(runtime_config(*range));
}

TEST(Config, EnvOverridesFile) {
  auto c = Config::parse("bed.tick_ms = 50\nplatform.port = 9000\n", "f.conf");
  ASSERT_TRUE(c);
  EXPECT_EQ(env_name("bed.tick_ms"), "AOECR_BED_TICK_MS");
  c->apply_env([](const std::string& name) -> std::optional<std::string> {
    if (name == "AOECR_PLATFORM_PORT") return "9100";
    return std::nullopt;
  });
  EXPECT_EQ(c->get("bed.tick_ms"), "50");
  EXPECT_EQ(c->get("platform.port"), "9100");
  EXPECT_EQ(c->entry("platform.port")->source, "env AOECR_PLATFORM_PORT");
  auto rc = runtime_config(*c);
  ASSERT_TRUE(rc);
  EXPECT_EQ(rc->server.port, 9100);
  EXPECT_EQ(rc->bed.tick, 50ms);
  EXPECT_DOUBLE_EQ(rc->bed.bed.tick_seconds, 0.05);
}

TEST(BedService, CommandMovesInterruptHalts) {
  auto broker = std::make_shared<InProcessBroker>();
  BedServiceConfig cfg;
  cfg.tick = 10ms;
  cfg.bed.tick_seconds = 0.01;
  BedService bed(broker, cfg);
  bed.start();
  SeqCounter seq;
  const auto plan = command::plan_from_label("backrest_extend");
  ASSERT_TRUE(broker->publish(make_envelope(seq, "s", topics::kCommand,
                                            {{"plan", nlohmann::json::parse(command::serialize(*plan))}})));
  broker->drain();
  EXPECT_FALSE(bed.idle());
  std::this_thread::sleep_for(100ms);
  const auto before = bed.snapshot().at(bed::Mechanism::kBackrest).position;
  EXPECT_GT(before, 0.0);

  const auto ticks = bed.ticks();
  ASSERT_TRUE(broker->publish(make_envelope(seq, "s", topics::kInterrupt, {{"reason", "patient"}})));
  broker->drain();
  EXPECT_TRUE(bed.idle());
  EXPECT_LE(bed.ticks() - ticks, 2u);
  const auto frozen = bed.snapshot().at(bed::Mechanism::kBackrest).position;
  std::this_thread::sleep_for(50ms);
  EXPECT_EQ(bed.snapshot().at(bed::Mechanism::kBackrest).position, frozen);
  EXPECT_EQ(bed.interrupts(), 1u);
  bed.stop();
}

TEST(BedService, RejectsInvalidCommand) {
  auto broker = std::make_shared<InProcessBroker>();
  BedService bed(broker);
  bed.start();
  SeqCounter seq;
  (void)broker->publish(make_envelope(seq, "s", topics::kCommand, {{"plan", {{"kind", "dance"}}}}));
  (void)broker->publish(make_envelope(seq, "s", topics::kCommand, {{"nothing", 1}}));
  broker->drain();
  EXPECT_TRUE(bed.idle());
  EXPECT_FALSE(bed.last_start());
}

TEST(AgentService, RequestToDecisionAndCommand) {
  testkit::TempDir dir("agent");
  auto broker = std::make_shared<InProcessBroker>();
  auto backend = std::make_shared<CountingBackend>();
  AgentServiceConfig cfg;
  cfg.store_dir = dir.path();
  AgentService agent(broker, backend, nullptr, cfg);
  agent.start();
  Collector decisions(*broker, topic_for("s1", topics::kDecision));
  Collector commands(*broker, topic_for("s1", topics::kCommand));
  SeqCounter seq;
  const std::vector<std::string> texts{"Please raise the backrest so I can sit up.",
                                       "Please lower my left leg rest.", "stop"};
  for (const auto& t : texts) {
    ASSERT_TRUE(broker->publish(make_envelope(seq, "s1", topics::kRequest, {{"text", t}})));
  }
  ASSERT_TRUE(decisions.wait_for_count(3));
  agent.drain();
  broker->drain();
  const auto d = decisions.all();
  ASSERT_EQ(d.size(), 3u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d[i].seq, i + 1);
    EXPECT_EQ(d[i].payload["kind"], "execute");
  }
  EXPECT_EQ(d[0].payload["plan"]["steps"][0]["action"], "backrest_extend");
  EXPECT_EQ(d[1].payload["plan"]["steps"][0]["action"], "left_leg_retract");
  EXPECT_EQ(d[2].payload["plan"]["kind"], "stop");
  EXPECT_EQ(commands.all().size(), 3u);

  std::vector<std::string> types;
  for (const auto& e : agent.store().read("s1")) types.push_back(e["type"]);
  EXPECT_EQ(types, (std::vector<std::string>{"request", "decision", "command", "request", "decision",
                                             "command", "request", "decision", "command"}));
  agent.stop();
}

TEST(AgentService, DuplicateRequestHandledOnce) {
  testkit::TempDir dir("agent");
  auto broker = std::make_shared<InProcessBroker>();
  AgentServiceConfig cfg;
  cfg.store_dir = dir.path();
  AgentService agent(broker, std::make_shared<CountingBackend>(), nullptr, cfg);
  agent.start();
  SeqCounter seq;
  auto e = make_envelope(seq, "s", topics::kRequest, {{"text", "Please lift the bed up."}});
  (void)broker->publish(e);
  (void)broker->publish(e);
  broker->drain();
  agent.drain();
  EXPECT_EQ(agent.decisions(), 1u);
}

TEST(AgentService, FeedbackPersistsAndReplaysAfterRestart) {
  testkit::TempDir dir("agent");
  auto broker = std::make_shared<InProcessBroker>();
  AgentServiceConfig cfg;
  cfg.store_dir = dir.path();
  EqualizerState before;
  {
    AgentService agent(broker, std::make_shared<CountingBackend>(), nullptr, cfg);
    agent.start();
    SeqCounter seq;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 12; ++i) {
      nlohmann::json scores = all_scores(3);
      scores["conciseness"] = std::uniform_int_distribution<int>(1, 2)(rng);
      scores["safety"] = std::uniform_int_distribution<int>(3, 5)(rng);
      ASSERT_TRUE(broker->publish(make_envelope(seq, "s1", topics::kFeedback, {{"scores", scores}})));
    }
    broker->drain();
    agent.drain();
    before = agent.equalizer("s1");
    EXPECT_EQ(before.update_count, 12u);
    EXPECT_GT(before.weights[expert::Metric::kConciseness], 0.125);
    agent.stop();
  }
  AgentService restarted(broker, std::make_shared<CountingBackend>(), nullptr, cfg);
  restarted.start();
  const auto after = restarted.equalizer("s1");
  EXPECT_EQ(after.weights, before.weights);
  EXPECT_EQ(after.update_count, before.update_count);
  EXPECT_EQ(replay_equalizer(restarted.store().read("s1"), cfg.feedback_rate).weights, before.weights);
  restarted.stop();
}

TEST(AgentService, MalformedFeedbackIgnored) {
  testkit::TempDir dir("agent");
  auto broker = std::make_shared<InProcessBroker>();
  AgentServiceConfig cfg;
  cfg.store_dir = dir.path();
  AgentService agent(broker, std::make_shared<CountingBackend>(), nullptr, cfg);
  agent.start();
  SeqCounter seq;
  (void)broker->publish(make_envelope(seq, "s", topics::kFeedback, {{"scores", {{"empathy", 7}}}}));
  broker->drain();
  agent.drain();
  EXPECT_EQ(agent.equalizer("s").update_count, 0u);
  EXPECT_EQ(agent.equalizer("s").weights, expert::EqualizerWeights::uniform());
}

TEST(AgentService, DeadlineRefuses) {
  testkit::TempDir dir("agent");
  auto broker = std::make_shared<InProcessBroker>();
  AgentServiceConfig cfg;
  cfg.store_dir = dir.path();
  cfg.deadline = 100ms;
  AgentService agent(broker, std::make_shared<SlowBackend>(400ms), nullptr, cfg);
  agent.start();
  Collector decisions(*broker, topic_for("s", topics::kDecision));
  SeqCounter seq;
  const auto t0 = std::chrono::steady_clock::now();
  (void)broker->publish(make_envelope(seq, "s", topics::kRequest, {{"text", "Please lift the bed up."}}));
  ASSERT_TRUE(decisions.wait_for_count(1));
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 390ms);
  const auto d = decisions.all()[0];
  EXPECT_EQ(d.payload["kind"], "refuse");
  EXPECT_EQ(d.payload["reason"], "decision deadline exceeded");
  agent.drain();
  agent.stop();
}

TEST(AgentService, InterruptBypassesModel) {
  testkit::TempDir dir("agent");
  auto broker = std::make_shared<InProcessBroker>();
  auto backend = std::make_shared<CountingBackend>();
  AgentServiceConfig cfg;
  cfg.store_dir = dir.path();
  AgentService agent(broker, backend, nullptr, cfg);
  BedServiceConfig bcfg;
  bcfg.tick = 20ms;
  bcfg.bed.tick_seconds = 0.02;
  BedService bed(broker, bcfg);
  agent.start();
  bed.start();
  SeqCounter seq;
  (void)broker->publish(make_envelope(seq, "s", topics::kRequest, {{"text", "Please lift the bed up."}}));
  Collector commands(*broker, topic_for("s", topics::kCommand));
  ASSERT_TRUE(commands.wait_for_count(1));
  broker->drain();
  agent.drain();
  EXPECT_FALSE(bed.idle());
  const int calls = backend->calls.load();
  (void)broker->publish(make_envelope(seq, "s", topics::kInterrupt, {{"reason", "patient"}}));
  broker->drain();
  EXPECT_TRUE(bed.idle());
  EXPECT_EQ(backend->calls.load(), calls);
  bed.stop();
  agent.stop();
}

TEST(Mqtt, PacketCodec) {
  const auto p = mqtt::publish_packet("aoecr/v1/s/request", std::string(300, 'x'), 7);
  const auto bytes = mqtt::encode_packet(p);
  std::size_t used = 0;
  auto partial = mqtt::decode_packet(std::string_view(bytes).substr(0, 3), used);
  ASSERT_TRUE(partial);
  EXPECT_FALSE(*partial);
  auto full = mqtt::decode_packet(bytes + "tail", used);
  ASSERT_TRUE(full && *full);
  EXPECT_EQ(used, bytes.size());
  auto fields = mqtt::parse_publish(**full);
  ASSERT_TRUE(fields);
  EXPECT_EQ(fields->topic, "aoecr/v1/s/request");
  EXPECT_EQ(fields->packet_id, 7);
  EXPECT_EQ(fields->qos, 1);
  EXPECT_EQ(fields->payload, std::string(300, 'x'));

  for (auto pkt : {mqtt::connect_packet("c", 30), mqtt::subscribe_packet(3, {"a/+", "b/#"}),
                   mqtt::unsubscribe_packet(4, {"a/+"})}) {
    const auto b = mqtt::encode_packet(pkt);
    auto d = mqtt::decode_packet(b, used);
    ASSERT_TRUE(d && *d);
    EXPECT_EQ((*d)->type, pkt.type);
    EXPECT_EQ((*d)->body, pkt.body);
  }
}

TEST(Mqtt, ListenerBridgesClients) {
  auto local = std::make_shared<InProcessBroker>();
  MqttListener listener(local, "127.0.0.1", 0);
  auto port = listener.start();
  ASSERT_TRUE(port) << port.error();

  MqttClientConfig cc;
  cc.port = *port;
  cc.client_id = "test-a";
  auto client = MqttClientBroker::connect(cc);
  ASSERT_TRUE(client) << client.error();
  Collector remote(**client, topic_for("+", topics::kDecision));
  Collector here(*local, topic_for("+", topics::kRequest));

  // Wait for the subscription to reach the listener.
  SeqCounter seq;
  for (int i = 0; i < 50 && remote.all().empty(); ++i) {
    (void)local->publish(make_envelope(seq, "probe", topics::kDecision, {{"probe", true}}));
    std::this_thread::sleep_for(20ms);
  }
  ASSERT_FALSE(remote.all().empty());

  SeqCounter cseq;
  ASSERT_TRUE((*client)->publish(make_envelope(cseq, "s1", topics::kRequest, {{"text", "hi"}})));
  ASSERT_TRUE(here.wait_for_count(1));
  EXPECT_EQ(here.all()[0].payload["text"], "hi");
  EXPECT_EQ(here.all()[0].session_id, "s1");

  std::this_thread::sleep_for(50ms);
  const auto n = remote.all().size();
  (void)local->publish(make_envelope(seq, "s1", topics::kDecision, {{"kind", "execute"}}));
  ASSERT_TRUE(remote.wait_for_count(n + 1));
  EXPECT_EQ(remote.all().back().payload["kind"], "execute");
  EXPECT_GE(listener.clients(), 1u);
  (*client)->close();
  listener.stop();
}
