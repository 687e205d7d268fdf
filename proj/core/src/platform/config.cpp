#include "aoecr/platform/config.h"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "aoecr/util/text.h"

namespace aoecr::platform {

std::string ConfigError::what() const {
  if (line > 0) return source + ":" + std::to_string(line) + ": " + message;
  return source + ": " + message;
}

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> keys{
      {"llm.backend", "oracle", "oracle | scripted | remote"},
      {"llm.endpoint", "http://127.0.0.1:8000/v1/chat/completions", "remote chat-completion URL"},
      {"llm.model", "chatglm4-9b", "remote model name"},
      {"llm.timeout_ms", "30000", "remote call budget"},
      {"llm.max_retries", "2", "remote retries on transport errors"},
      {"llm.backoff_ms", "200", "first retry delay, doubled per retry"},
      {"llm.token_env", "AOECR_LLM_TOKEN", "environment variable holding the bearer token"},
      {"llm.sampling", "{}", "JSON object merged into the remote request body"},
      {"llm.transcript", "", "JSONL transcript for the scripted backend"},
      {"oracle.seed", "0", "oracle fault-model seed"},
      {"oracle.corruption", "0,0,0,0", "generation corruption for high,medium,low,unclear"},
      {"oracle.revision_corruption", "0,0,0,0", "revision corruption for high,medium,low,unclear"},
      {"oracle.detection", "1", "probability a wrong plan is flagged by the check"},
      {"oracle.judge_noise", "0", "probability of a +-1 change per judged metric"},
      {"agent.max_revisions", "2", "self-check revision rounds"},
      {"agent.deadline_ms", "30000", "decision deadline"},
      {"agent.store_dir", "sessions", "session logs and equalizer snapshots"},
      {"agent.feedback_rate", "0.2", "equalizer update rate"},
      {"agent.default_loop_repetitions", "3", "loop count when none is stated"},
      {"agent.history_limit", "6", "dialogue turns kept in prompts"},
      {"expert.enabled", "true", "optimize responses with the expert backend"},
      {"eval.panel_size", "3", "experts on the scoring panel"},
      {"degree.slightly", "0.25", "extent for 'slightly'"},
      {"degree.a_bit", "0.40", "extent for 'a bit'"},
      {"degree.halfway", "0.50", "extent for 'halfway'"},
      {"degree.mostly", "0.75", "extent for 'mostly'"},
      {"degree.fully", "1.00", "extent for 'fully'"},
      {"bed.tick_ms", "100", "bed loop tick"},
      {"bed.telemetry_hz", "2", "telemetry rate"},
      {"bed.rate.lift", "0.1", "lift stroke fraction per second"},
      {"bed.rate.backrest", "0.1", "backrest stroke fraction per second"},
      {"bed.rate.left_leg", "0.1", "left leg stroke fraction per second"},
      {"bed.rate.right_leg", "0.1", "right leg stroke fraction per second"},
      {"platform.host", "127.0.0.1", "HTTP/WS bind address"},
      {"platform.port", "8080", "HTTP/WS port"},
      {"broker.kind", "inprocess", "inprocess | mqtt"},
      {"broker.host", "127.0.0.1", "MQTT broker host"},
      {"broker.port", "1883", "MQTT broker port"},
      {"broker.client_id", "aoecr", "MQTT client id prefix"},
      {"broker.listen_port", "0", "MQTT listener hosted by serve-platform, 0 disables"},
  };
  return keys;
}

namespace {

const KeySpec* find_spec(std::string_view key) {
  for (const auto& k : config_schema()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

}  // namespace

std::string env_name(std::string_view key) {
  std::string out = "AOECR_";
  for (char c : key) {
    out += (c == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

Config Config::defaults() {
  Config c;
  for (const auto& k : config_schema()) {
    c.entries_[std::string(k.key)] = Entry{std::string(k.default_value), "default", 0};
  }
  return c;
}

Expected<Config, ConfigError> Config::parse(std::string_view text, std::string source) {
  Config c = defaults();
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      return unexpected(ConfigError{source, lineno, "expected 'key = value'"});
    }
    const auto key = text::trim(line.substr(0, eq));
    auto value = text::trim(line.substr(eq + 1));
    if (key.empty()) return unexpected(ConfigError{source, lineno, "missing key"});
    if (!find_spec(key)) return unexpected(ConfigError{source, lineno, "unknown key '" + key + "'"});
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    c.entries_[key] = Entry{value, source, lineno};
  }
  return c;
}

Expected<Config, ConfigError> Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return unexpected(ConfigError{path.string(), 0, "cannot open file"});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void Config::apply_env(const EnvLookup& lookup) {
  for (const auto& k : config_schema()) {
    const auto name = env_name(k.key);
    if (auto v = lookup(name)) entries_[std::string(k.key)] = Entry{*v, "env " + name, 0};
  }
}

void Config::apply_env() {
  apply_env([](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  });
}

void Config::set(std::string key, std::string value) {
  entries_[std::move(key)] = Entry{std::move(value), "override", 0};
}

std::string Config::get(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? std::string() : it->second.value;
}

const Config::Entry* Config::entry(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

std::string fmt_number(double d) {
  std::ostringstream os;
  os << d;
  return os.str();
}

struct Reader {
  const Config& config;
  std::optional<ConfigError> error;

  ConfigError fail(std::string_view key, const std::string& message) {
    const auto* e = config.entry(key);
    return ConfigError{e ? e->source : "config", e ? e->line : 0,
                       std::string(key) + ": " + message};
  }

  std::string str(std::string_view key) { return config.get(key); }

  double number(std::string_view key, double lo, double hi) {
    const auto v = config.get(key);
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      if (d < lo || d > hi) {
        if (!error) error = fail(key, "'" + v + "' outside [" + fmt_number(lo) + ", " + fmt_number(hi) + "]");
        return lo;
      }
      return d;
    } catch (const std::exception&) {
      if (!error) error = fail(key, "'" + v + "' is not a number");
      return lo;
    }
  }

  std::int64_t integer(std::string_view key, std::int64_t lo, std::int64_t hi) {
    const auto v = config.get(key);
    try {
      std::size_t used = 0;
      const long long n = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing");
      if (n < lo || n > hi) {
        if (!error) error = fail(key, "'" + v + "' outside [" + std::to_string(lo) + ", " +
                                          std::to_string(hi) + "]");
        return lo;
      }
      return n;
    } catch (const std::exception&) {
      if (!error) error = fail(key, "'" + v + "' is not an integer");
      return lo;
    }
  }

  bool boolean(std::string_view key) {
    const auto v = text::to_lower(config.get(key));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    if (!error) error = fail(key, "'" + v + "' is not a boolean");
    return false;
  }

  PerClarity<double> per_clarity(std::string_view key) {
    PerClarity<double> out{};
    const auto parts = text::split(config.get(key), ',');
    if (parts.size() != kClarityCount) {
      if (!error) error = fail(key, "expected four comma-separated rates");
      return out;
    }
    for (std::size_t i = 0; i < kClarityCount; ++i) {
      try {
        out[i] = std::stod(text::trim(parts[i]));
      } catch (const std::exception&) {
        if (!error) error = fail(key, "'" + parts[i] + "' is not a number");
      }
      if (out[i] < 0.0 || out[i] > 1.0) {
        if (!error) error = fail(key, "rates must lie in [0, 1]");
      }
    }
    return out;
  }
};

}  // namespace

Expected<RuntimeConfig, ConfigError> runtime_config(const Config& config) {
  Reader r{config, std::nullopt};
  RuntimeConfig rc;

  const auto backend = r.str("llm.backend");
  if (backend == "oracle") {
    rc.backend.kind = llm::BackendConfig::Kind::kOracle;
  } else if (backend == "scripted") {
    rc.backend.kind = llm::BackendConfig::Kind::kScripted;
  } else if (backend == "remote") {
    rc.backend.kind = llm::BackendConfig::Kind::kRemote;
  } else {
    return unexpected(r.fail("llm.backend", "'" + backend + "' is not oracle, scripted or remote"));
  }
  rc.backend.remote.endpoint = r.str("llm.endpoint");
  rc.backend.remote.model = r.str("llm.model");
  rc.backend.remote.timeout = std::chrono::milliseconds(r.integer("llm.timeout_ms", 1, 3600000));
  rc.backend.remote.max_retries = static_cast<int>(r.integer("llm.max_retries", 0, 10));
  rc.backend.remote.backoff = std::chrono::milliseconds(r.integer("llm.backoff_ms", 0, 60000));
  rc.backend.remote.token_env = r.str("llm.token_env");
  {
    auto sampling = nlohmann::json::parse(r.str("llm.sampling"), nullptr, false);
    if (sampling.is_discarded() || !sampling.is_object()) {
      return unexpected(r.fail("llm.sampling", "expected a JSON object"));
    }
    rc.backend.remote.sampling = std::move(sampling);
  }
  rc.backend.transcript_path = r.str("llm.transcript");
  if (rc.backend.kind == llm::BackendConfig::Kind::kScripted && rc.backend.transcript_path.empty()) {
    return unexpected(r.fail("llm.transcript", "required by the scripted backend"));
  }
  rc.backend.oracle.seed =
      static_cast<std::uint64_t>(r.integer("oracle.seed", 0, std::numeric_limits<std::int64_t>::max()));
  rc.backend.oracle.corruption = r.per_clarity("oracle.corruption");
  rc.backend.oracle.revision_corruption = r.per_clarity("oracle.revision_corruption");
  rc.backend.oracle.detection = r.number("oracle.detection", 0.0, 1.0);
  rc.backend.oracle.judge_noise = r.number("oracle.judge_noise", 0.0, 1.0);

  auto& agent = rc.agent;
  agent.pipeline.max_revisions = static_cast<int>(r.integer("agent.max_revisions", 0, 10));
  agent.pipeline.default_loop_repetitions =
      static_cast<int>(r.integer("agent.default_loop_repetitions", 1, 10));
  agent.pipeline.history_limit = static_cast<std::size_t>(r.integer("agent.history_limit", 0, 100));
  for (std::string_view key : {"slightly", "a_bit", "halfway", "mostly", "fully"}) {
    agent.pipeline.degrees.set_fraction(key, r.number("degree." + std::string(key), 0.0, 1.0));
  }
  agent.deadline = std::chrono::milliseconds(r.integer("agent.deadline_ms", 1, 3600000));
  agent.store_dir = r.str("agent.store_dir");
  agent.feedback_rate = r.number("agent.feedback_rate", 1e-9, 1.0);
  rc.expert_enabled = r.boolean("expert.enabled");
  rc.panel_size = static_cast<std::size_t>(r.integer("eval.panel_size", 1, 32));

  rc.bed.tick = std::chrono::milliseconds(r.integer("bed.tick_ms", 1, 10000));
  rc.bed.bed.tick_seconds = std::chrono::duration<double>(rc.bed.tick).count();
  rc.bed.telemetry_hz = r.number("bed.telemetry_hz", 0.01, 100.0);
  const char* rate_keys[] = {"bed.rate.lift", "bed.rate.backrest", "bed.rate.left_leg",
                             "bed.rate.right_leg"};
  for (std::size_t i = 0; i < 4; ++i) rc.bed.bed.rates[i] = r.number(rate_keys[i], 1e-6, 100.0);

  rc.server.host = r.str("platform.host");
  rc.server.port = static_cast<std::uint16_t>(r.integer("platform.port", 0, 65535));
  rc.broker.kind = r.str("broker.kind");
  if (rc.broker.kind != "inprocess" && rc.broker.kind != "mqtt") {
    return unexpected(r.fail("broker.kind", "'" + rc.broker.kind + "' is not inprocess or mqtt"));
  }
  rc.broker.host = r.str("broker.host");
  rc.broker.port = static_cast<std::uint16_t>(r.integer("broker.port", 1, 65535));
  rc.broker.client_id = r.str("broker.client_id");
  rc.broker.listen_port = static_cast<std::uint16_t>(r.integer("broker.listen_port", 0, 65535));

  if (r.error) return unexpected(*r.error);
  return rc;
}

}  // namespace aoecr::platform
