#include "aoecr/platform/session_store.h"

#include <algorithm>
#include <fstream>

#include "aoecr/platform/wire.h"

namespace aoecr::platform {

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
}

std::filesystem::path SessionStore::log_path(const std::string& session_id) const {
  return dir_ / (session_id + ".jsonl");
}

std::filesystem::path SessionStore::equalizer_path(const std::string& session_id) const {
  return dir_ / (session_id + ".equalizer.json");
}

Expected<bool, std::string> SessionStore::append(const std::string& session_id,
                                                 nlohmann::json event) {
  if (!valid_session_id(session_id)) return unexpected("invalid session id '" + session_id + "'");
  std::lock_guard lock(mu_);
  auto it = counts_.find(session_id);
  if (it == counts_.end()) {
    std::uint64_t n = 0;
    std::ifstream in(log_path(session_id));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) ++n;
    }
    it = counts_.emplace(session_id, n).first;
  }
  if (!event.contains("ts")) event["ts"] = now_ms();
  event["index"] = it->second;
  std::ofstream out(log_path(session_id), std::ios::app | std::ios::binary);
  if (!out) return unexpected("cannot append to " + log_path(session_id).string());
  out << event.dump() << '\n';
  out.flush();
  if (!out) return unexpected("write failed for " + log_path(session_id).string());
  ++it->second;
  return true;
}

std::vector<nlohmann::json> SessionStore::read(const std::string& session_id) const {
  std::vector<nlohmann::json> out;
  if (!valid_session_id(session_id)) return out;
  std::lock_guard lock(mu_);
  std::ifstream in(log_path(session_id));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    // A torn final line from a crash is skipped.
    if (!j.is_discarded()) out.push_back(std::move(j));
  }
  return out;
}

bool SessionStore::exists(const std::string& session_id) const {
  if (!valid_session_id(session_id)) return false;
  std::error_code ec;
  return std::filesystem::exists(log_path(session_id), ec);
}

Expected<bool, std::string> SessionStore::create(const std::string& session_id) {
  if (!valid_session_id(session_id)) return unexpected("invalid session id '" + session_id + "'");
  std::lock_guard lock(mu_);
  std::ofstream out(log_path(session_id), std::ios::app | std::ios::binary);
  if (!out) return unexpected("cannot create " + log_path(session_id).string());
  return true;
}

std::vector<std::string> SessionStore::sessions() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
    const auto name = entry.path().filename().string();
    if (name.ends_with(".jsonl")) out.push_back(name.substr(0, name.size() - 6));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Expected<bool, std::string> SessionStore::save_equalizer(const std::string& session_id,
                                                         const EqualizerState& state) {
  if (!valid_session_id(session_id)) return unexpected("invalid session id '" + session_id + "'");
  nlohmann::ordered_json j;
  j["session_id"] = session_id;
  j["weights"] = expert::weights_to_json(state.weights);
  j["update_count"] = state.update_count;
  const auto path = equalizer_path(session_id);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) return unexpected("cannot write " + tmp);
    // Full precision so a reload is bit-exact.
    out << j.dump(2) << '\n';
    if (!out) return unexpected("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) return unexpected("cannot replace " + path.string() + ": " + ec.message());
  return true;
}

std::optional<EqualizerState> SessionStore::load_equalizer(const std::string& session_id) const {
  if (!valid_session_id(session_id)) return std::nullopt;
  std::ifstream in(equalizer_path(session_id));
  if (!in) return std::nullopt;
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("weights")) return std::nullopt;
  auto w = expert::weights_from_json(j["weights"]);
  if (!w) return std::nullopt;
  EqualizerState s;
  s.weights = *w;
  s.update_count = j.value("update_count", std::uint64_t{0});
  return s;
}

EqualizerState replay_equalizer(const std::vector<nlohmann::json>& log, double rate) {
  EqualizerState s;
  for (const auto& event : log) {
    if (event.value("type", "") != events::kFeedback || !event.contains("scores")) continue;
    auto scores = expert::scores_from_json(event["scores"]);
    if (!scores) continue;
    const double r = event.value("rate", rate);
    s.weights = expert::update_equalizer(s.weights, *scores, r);
    ++s.update_count;
  }
  return s;
}

}  // namespace aoecr::platform
