#include "aoecr/llm/gateway.h"

namespace aoecr::llm {

Expected<BackendPtr, std::string> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendConfig::Kind::kRemote:
      if (config.remote.endpoint.empty()) return unexpected(std::string("remote endpoint not set"));
      return BackendPtr(std::make_shared<RemoteBackend>(config.remote));
    case BackendConfig::Kind::kScripted: {
      auto loaded = ScriptedBackend::load(config.transcript_path);
      if (!loaded) return unexpected(loaded.error());
      return BackendPtr(std::move(loaded).value());
    }
    case BackendConfig::Kind::kOracle:
      if (!config.oracle.valid()) {
        return unexpected(std::string("oracle probabilities must lie in [0, 1]"));
      }
      return BackendPtr(std::make_shared<OracleBackend>(config.oracle));
  }
  return unexpected(std::string("unknown backend kind"));
}

}  // namespace aoecr::llm
