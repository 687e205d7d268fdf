#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aoecr/llm/gateway.h"
#include "aoecr/platform/agent_service.h"
#include "aoecr/platform/bed_service.h"
#include "aoecr/util/expected.h"

namespace aoecr::platform {

struct ConfigError {
  std::string source;  // file path or "env"
  int line = 0;        // 0 when not tied to a line
  std::string message;

  /// "path:line: message"
  std::string what() const;
};

struct KeySpec {
  std::string_view key;
  std::string_view default_value;
  std::string_view description;
};

/// Every recognized key with its default.
const std::vector<KeySpec>& config_schema();

/// "llm.backend" -> "AOECR_LLM_BACKEND"
std::string env_name(std::string_view key);

/// `key = value` lines; blank lines and lines starting with '#' are ignored.
/// Values may be wrapped in double quotes.
class Config {
 public:
  struct Entry {
    std::string value;
    std::string source;
    int line = 0;
  };

  static Expected<Config, ConfigError> parse(std::string_view text, std::string source = "<config>");
  static Expected<Config, ConfigError> load(const std::filesystem::path& path);
  /// Defaults only.
  static Config defaults();

  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
  /// AOECR_* variables override file values for every known key.
  void apply_env(const EnvLookup& lookup);
  void apply_env();

  void set(std::string key, std::string value);
  std::string get(std::string_view key) const;
  const Entry* entry(std::string_view key) const;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;
};

struct BrokerConfig {
  std::string kind = "inprocess";  // inprocess | mqtt
  std::string host = "127.0.0.1";
  std::uint16_t port = 1883;
  std::string client_id = "aoecr";
  std::uint16_t listen_port = 0;  // MQTT listener hosted by serve-platform; 0 disables
};

struct RuntimeConfig {
  llm::BackendConfig backend;
  bool expert_enabled = true;
  std::size_t panel_size = 3;
  AgentServiceConfig agent;
  BedServiceConfig bed;
  ServerConfig server;
  BrokerConfig broker;
};

Expected<RuntimeConfig, ConfigError> runtime_config(const Config& config);

}  // namespace aoecr::platform
