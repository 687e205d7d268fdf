#include "aoecr/forge/dataset.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <thread>

#include <nlohmann/json.hpp>

#include "aoecr/command/labels.h"
#include "aoecr/llm/prompt.h"
#include "aoecr/llm/sections.h"
#include "aoecr/llm/task.h"
#include "aoecr/util/rng.h"
#include "aoecr/util/text.h"

namespace aoecr::forge {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::kDirectAdjustment:
      return "direct_adjustment";
    case Reason::kPhysicalDiscomfort:
      return "physical_discomfort";
    case Reason::kPsychologicalSensation:
      return "psychological_sensation";
  }
  return "direct_adjustment";
}

std::string_view to_string(DegradeOp op) {
  switch (op) {
    case DegradeOp::kDeletion:
      return "deletion";
    case DegradeOp::kShuffle:
      return "shuffle";
    case DegradeOp::kStutter:
      return "stutter";
    case DegradeOp::kFiller:
      return "filler";
  }
  return "deletion";
}

std::string ForgeError::message() const {
  switch (kind) {
    case Kind::kBackend:
      return "backend: " + detail;
    case Kind::kRejectedPair:
      return "rejected pair: " + detail;
    case Kind::kUnknownLabel:
      return "unknown label: " + detail;
  }
  return detail;
}

std::vector<ScenarioSeed> make_seeds(std::size_t count, std::uint64_t master_seed,
                                     const std::vector<std::string>& labels) {
  const auto& pool = labels.empty() ? command::single_action_labels() : labels;
  std::vector<ScenarioSeed> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "pn-%06zu", i);
    ScenarioSeed s;
    s.id = id;
    s.label = pool[i % pool.size()];
    s.reason = kAllReasons[(i / pool.size()) % kAllReasons.size()];
    s.rng_seed = stream_rng(master_seed, s.id)();
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

constexpr std::string_view kEnvironment =
    "The scene is a bedroom in an elderly-care facility. The patient lies in a nursing bed "
    "with four mechanisms: lift (raises the whole bed), backrest (helps the patient sit up "
    "or lie down), and separate left and right leg sections. Each mechanism can go up or "
    "down.";

}  // namespace

llm::Messages patient_messages(const ScenarioSeed& seed) {
  llm::TaskBlock b;
  b.task = llm::tasks::kPatient;
  b.fields[llm::fields::kLabel] = seed.label;
  b.fields[llm::fields::kScenario] = std::string(to_string(seed.reason));
  b.fields[llm::fields::kSeed] = std::to_string(seed.rng_seed);
  if (auto plan = command::plan_from_label(seed.label)) {
    b.fields[llm::fields::kCommand] = command::serialize(*plan);
  }
  b.instructions =
      "You want the bed adjusted as described by COMMAND, for the reason given in SCENARIO. "
      "Say it to the nurse in one natural spoken sentence. Never mention command names, "
      "JSON or anything technical.";
  return {{llm::Role::kSystem,
           std::string(kEnvironment) + " You are an elderly patient lying in this bed."},
          {llm::Role::kUser, llm::render_task(b)}};
}

llm::Messages nurse_messages(const ScenarioSeed& seed, std::string_view patient_request) {
  llm::TaskBlock b;
  b.task = llm::tasks::kNurse;
  b.fields[llm::fields::kLabel] = seed.label;
  b.fields[llm::fields::kRequest] = std::string(patient_request);
  b.instructions = "Reply to the patient in one short, simple sentence confirming what you "
                   "will do.";
  return {{llm::Role::kSystem,
           std::string(kEnvironment) + " You are the nurse caring for this patient."},
          {llm::Role::kUser, llm::render_task(b)}};
}

bool passes_sanity_gate(std::string_view request) {
  const auto t = text::trim(request);
  if (t.empty()) return false;
  if (t.find('{') != std::string::npos || t.find('}') != std::string::npos) return false;
  if (t.find("```") != std::string::npos) return false;
  const auto lower = text::to_lower(t);
  for (const auto& label : command::label_vocabulary()) {
    if (label.find('_') != std::string::npos && lower.find(label) != std::string::npos) {
      return false;
    }
  }
  return lower.find("\"kind\"") == std::string::npos;
}

Expected<DialoguePair, ForgeError> simulate_pair(const ScenarioSeed& seed,
                                                 llm::ChatBackend& patient,
                                                 llm::ChatBackend& nurse) {
  auto plan = command::plan_from_label(seed.label);
  if (!plan) return unexpected(ForgeError{ForgeError::Kind::kUnknownLabel, seed.label});

  auto request = patient.complete(patient_messages(seed));
  if (!request) return unexpected(ForgeError{ForgeError::Kind::kBackend, request.error().message()});
  auto request_text = text::trim(*request);
  if (!passes_sanity_gate(request_text)) {
    return unexpected(ForgeError{ForgeError::Kind::kRejectedPair,
                                 seed.id + ": patient request leaks command syntax"});
  }

  auto reply = nurse.complete(nurse_messages(seed, request_text));
  if (!reply) return unexpected(ForgeError{ForgeError::Kind::kBackend, reply.error().message()});
  auto reply_text = text::trim(*reply);
  if (reply_text.empty()) {
    return unexpected(ForgeError{ForgeError::Kind::kRejectedPair, seed.id + ": empty nurse reply"});
  }

  DialoguePair pair;
  pair.id = seed.id + "-h";
  pair.clarity = Clarity::kHigh;
  pair.patient_request = std::move(request_text);
  pair.nurse_response = std::move(reply_text);
  pair.action_label = seed.label;
  pair.canonical_command = command::serialize(*plan);
  return pair;
}

// --- clarity degradation ---------------------------------------------------

namespace {

struct Token {
  std::string text;
  bool original = true;
};

const std::vector<std::string>& stopwords() {
  static const std::vector<std::string> words{
      "a",    "an",   "the",  "i",    "my",   "me",   "you",  "can",  "could", "please",
      "to",   "so",   "and",  "then", "of",   "is",   "am",   "are",  "it",    "for",
      "by",   "in",   "on",   "this", "that", "like", "with", "some", "be",    "do"};
  return words;
}

const std::vector<std::string>& target_nouns() {
  static const std::vector<std::string> words{"backrest", "back",   "bed",      "leg",
                                              "legs",     "section", "sections", "rest",
                                              "height",   "knee",   "knees"};
  return words;
}

constexpr std::array<std::string_view, 5> kFillers{"um,", "uh,", "you know,", "that thing", "er,"};

std::string core_word(const std::string& token) {
  auto w = text::words(token);
  return w.empty() ? std::string() : w.front();
}

bool is_member(const std::vector<std::string>& set, const std::string& w) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::size_t count_original(const std::vector<Token>& tokens) {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.original; }));
}

void delete_content_words(std::vector<Token>& tokens, std::size_t n, std::mt19937_64& rng) {
  for (std::size_t k = 0; k < n && count_original(tokens) > 1; ++k) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].original && !is_member(stopwords(), core_word(tokens[i].text))) {
        candidates.push_back(i);
      }
    }
    if (candidates.empty()) {
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].original) candidates.push_back(i);
      }
    }
    tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(candidates[uniform_index(rng, candidates.size())]));
  }
}

void shuffle_clauses(std::vector<Token>& tokens, std::mt19937_64& rng) {
  if (tokens.size() < 2) return;
  std::vector<std::vector<Token>> clauses(1);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto w = core_word(tokens[i].text);
    const bool starts_clause = i > 0 && (w == "then" || w == "and" || w == "so");
    if (starts_clause && !clauses.back().empty()) clauses.emplace_back();
    clauses.back().push_back(tokens[i]);
    if (!tokens[i].text.empty() && tokens[i].text.back() == ',' && i + 1 < tokens.size()) {
      clauses.emplace_back();
    }
  }
  std::erase_if(clauses, [](const auto& c) { return c.empty(); });
  if (clauses.size() < 2) {
    // One clause: swap its halves.
    const auto mid = tokens.size() / 2;
    std::rotate(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(mid), tokens.end());
    return;
  }
  std::vector<std::size_t> order(clauses.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  if (std::is_sorted(order.begin(), order.end())) {
    std::rotate(order.begin(), order.begin() + 1, order.end());
  }
  std::vector<Token> out;
  for (auto i : order) out.insert(out.end(), clauses[i].begin(), clauses[i].end());
  tokens = std::move(out);
}

std::string stutter_word(const std::string& token) {
  std::size_t i = 0;
  while (i < token.size() && !std::isalpha(static_cast<unsigned char>(token[i]))) ++i;
  if (i >= token.size()) return token;
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(token[i])));
  std::string prefix{c, '-', c, '-'};
  return token.substr(0, i) + prefix + token.substr(i);
}

void stutter(std::vector<Token>& tokens, std::size_t n, std::mt19937_64& rng) {
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto w = core_word(tokens[i].text);
      if (tokens[i].original && w.size() >= 2 && std::isalpha(static_cast<unsigned char>(w[0])) &&
          w.find('-') == std::string::npos) {
        candidates.push_back(i);
      }
    }
    if (candidates.empty()) return;
    auto& t = tokens[candidates[uniform_index(rng, candidates.size())]];
    t.text = stutter_word(t.text);
  }
}

void insert_fillers(std::vector<Token>& tokens, std::size_t n, std::mt19937_64& rng) {
  for (std::size_t k = 0; k < n; ++k) {
    const auto filler = kFillers[uniform_index(rng, kFillers.size())];
    const auto pos = uniform_index(rng, tokens.size() + 1);
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                  Token{std::string(filler), false});
  }
}

std::string normalize_stutter(const std::string& w) {
  // "w-w-want" -> "want"
  if (w.size() >= 5 && w[1] == '-' && w[3] == '-' && w[0] == w[2] && w[4] == w[0]) {
    return w.substr(4);
  }
  return w;
}

std::string render(const std::vector<Token>& tokens) {
  std::vector<std::string> parts;
  for (const auto& t : tokens) parts.push_back(t.text);
  return text::join(parts, " ");
}

}  // namespace

double token_retention(std::string_view original, std::string_view degraded) {
  const auto orig = text::words(original);
  if (orig.empty()) return 1.0;
  std::map<std::string, int> available;
  for (const auto& w : text::words(degraded)) ++available[normalize_stutter(w)];
  std::size_t kept = 0;
  for (const auto& w : orig) {
    auto it = available.find(w);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++kept;
    }
  }
  return static_cast<double>(kept) / static_cast<double>(orig.size());
}

DegradeTrace degrade_clarity_traced(std::string_view request, Clarity level,
                                    std::mt19937_64& rng) {
  DegradeTrace trace;
  std::vector<Token> tokens;
  for (auto& t : text::split_ws(request)) tokens.push_back({std::move(t), true});
  if (level == Clarity::kHigh) {
    trace.text = std::string(request);
    return trace;
  }

  std::vector<DegradeOp> pool{DegradeOp::kDeletion, DegradeOp::kShuffle, DegradeOp::kStutter,
                              DegradeOp::kFiller};
  std::shuffle(pool.begin(), pool.end(), rng);
  std::size_t n_ops = 1;
  if (level == Clarity::kLow) n_ops = 2 + uniform_index(rng, 2);
  if (level == Clarity::kUnclear) n_ops = 3 + uniform_index(rng, 2);
  std::vector<DegradeOp> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_ops));
  auto has = [&](DegradeOp op) { return std::find(chosen.begin(), chosen.end(), op) != chosen.end(); };

  // Fixed application order keeps each operator's signature intact.
  const std::size_t intensity = level == Clarity::kMedium ? 1 : level == Clarity::kLow ? 2 : 3;
  if (has(DegradeOp::kDeletion)) {
    const std::size_t n = level == Clarity::kMedium ? 1 : 1 + uniform_index(rng, intensity);
    delete_content_words(tokens, n, rng);
    trace.ops.push_back(DegradeOp::kDeletion);
  }
  if (level == Clarity::kUnclear) {
    std::erase_if(tokens, [&](const Token& t) { return is_member(target_nouns(), core_word(t.text)); });
    trace.target_nouns_removed = true;
  }
  if (has(DegradeOp::kShuffle)) {
    shuffle_clauses(tokens, rng);
    trace.ops.push_back(DegradeOp::kShuffle);
  }
  if (has(DegradeOp::kStutter)) {
    stutter(tokens, level == Clarity::kMedium ? 1 : 1 + uniform_index(rng, 2), rng);
    trace.ops.push_back(DegradeOp::kStutter);
  }
  if (has(DegradeOp::kFiller)) {
    insert_fillers(tokens, intensity == 1 ? 1 : intensity - 1 + uniform_index(rng, 2), rng);
    trace.ops.push_back(DegradeOp::kFiller);
  }

  if (level == Clarity::kUnclear) {
    // Unclear requests keep well under 70% of the original words.
    while (token_retention(request, render(tokens)) >= 0.7) {
      std::vector<std::size_t> originals;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].original) originals.push_back(i);
      }
      if (originals.empty()) break;
      tokens.erase(tokens.begin() +
                   static_cast<std::ptrdiff_t>(originals[uniform_index(rng, originals.size())]));
    }
  }
  if (tokens.empty()) tokens.push_back({"um, that thing", false});
  trace.text = render(tokens);
  return trace;
}

std::string degrade_clarity(std::string_view request, Clarity level, std::mt19937_64& rng) {
  return degrade_clarity_traced(request, level, rng).text;
}

Dataset expand_dataset(const Dataset& high, std::uint64_t seed) {
  Dataset out;
  out.reserve(high.size() * kClarityCount);
  for (const auto& pair : high) {
    out.push_back(pair);
    std::string base = pair.id;
    if (base.size() > 2 && base.ends_with("-h")) base.resize(base.size() - 2);
    for (auto level : {Clarity::kMedium, Clarity::kLow, Clarity::kUnclear}) {
      auto rng = stream_rng(seed, pair.id + "\x1f" + std::string(to_string(level)));
      DialoguePair d = pair;
      d.id = base + "-" + std::string(1, to_string(level).front());
      d.clarity = level;
      d.patient_request = degrade_clarity(pair.patient_request, level, rng);
      d.parent_id = pair.id;
      out.push_back(std::move(d));
    }
  }
  return out;
}

ForgeResult forge(const std::vector<ScenarioSeed>& seeds, llm::ChatBackend& patient,
                  llm::ChatBackend& nurse, std::uint64_t expand_seed) {
  std::vector<std::optional<Expected<DialoguePair, ForgeError>>> slots(seeds.size());
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < seeds.size(); i += workers) {
        slots[i].emplace(simulate_pair(seeds[i], patient, nurse));
      }
    }));
  }
  for (auto& j : jobs) j.get();

  ForgeResult result;
  Dataset high;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    auto& r = *slots[i];
    if (r) {
      high.push_back(std::move(r).value());
    } else {
      result.rejected.push_back(seeds[i].id + ": " + r.error().message());
    }
  }
  result.dataset = expand_dataset(high, expand_seed);
  return result;
}

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats s;
  for (const auto& label : command::label_vocabulary()) {
    s.by_label[label] = 0;
    for (auto c : kAllClarities) s.by_label_clarity[label][std::string(to_string(c))] = 0;
  }
  for (auto c : kAllClarities) s.by_clarity[std::string(to_string(c))] = 0;
  for (const auto& p : dataset) {
    ++s.by_label[p.action_label];
    ++s.by_clarity[std::string(to_string(p.clarity))];
    ++s.by_label_clarity[p.action_label][std::string(to_string(p.clarity))];
    ++s.total;
  }
  return s;
}

nlohmann::json stats_to_json(const DatasetStats& s) {
  nlohmann::json j;
  j["total"] = s.total;
  j["by_label"] = s.by_label;
  j["by_clarity"] = s.by_clarity;
  j["by_label_clarity"] = s.by_label_clarity;
  return j;
}

std::string stats_to_markdown(const DatasetStats& s) {
  std::string out = "| Action | high | medium | low | unclear | total |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& label : command::label_vocabulary()) {
    const auto& row = s.by_label_clarity.at(label);
    out += "| " + label;
    for (auto c : kAllClarities) out += " | " + std::to_string(row.at(std::string(to_string(c))));
    out += " | " + std::to_string(s.by_label.at(label)) + " |\n";
  }
  out += "| **total**";
  for (auto c : kAllClarities) out += " | " + std::to_string(s.by_clarity.at(std::string(to_string(c))));
  out += " | " + std::to_string(s.total) + " |\n";
  return out;
}

nlohmann::json pair_to_json(const DialoguePair& p) {
  ojson j;
  j["id"] = p.id;
  j["clarity"] = std::string(to_string(p.clarity));
  j["patient_request"] = p.patient_request;
  j["nurse_response"] = p.nurse_response;
  j["action_label"] = p.action_label;
  j["canonical_command"] = p.canonical_command;
  j["parent_id"] = p.parent_id ? ojson(*p.parent_id) : ojson(nullptr);
  return nlohmann::json::parse(j.dump());
}

namespace {

std::string pair_line(const DialoguePair& p) {
  ojson j;
  j["id"] = p.id;
  j["clarity"] = std::string(to_string(p.clarity));
  j["patient_request"] = p.patient_request;
  j["nurse_response"] = p.nurse_response;
  j["action_label"] = p.action_label;
  j["canonical_command"] = p.canonical_command;
  j["parent_id"] = p.parent_id ? ojson(*p.parent_id) : ojson(nullptr);
  return j.dump();
}

}  // namespace

Expected<DialoguePair, std::string> pair_from_json(const nlohmann::json& j) {
  try {
    DialoguePair p;
    p.id = j.at("id").get<std::string>();
    auto clarity = clarity_from_string(j.at("clarity").get<std::string>());
    if (!clarity) return unexpected("unknown clarity in " + p.id);
    p.clarity = *clarity;
    p.patient_request = j.at("patient_request").get<std::string>();
    p.nurse_response = j.at("nurse_response").get<std::string>();
    p.action_label = j.at("action_label").get<std::string>();
    p.canonical_command = j.at("canonical_command").get<std::string>();
    if (j.contains("parent_id") && !j.at("parent_id").is_null()) {
      p.parent_id = j.at("parent_id").get<std::string>();
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    return unexpected(std::string(e.what()));
  }
}

Expected<Dataset, std::string> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return unexpected("cannot open " + path.string());
  Dataset out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      return unexpected(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto p = pair_from_json(j);
    if (!p) return unexpected(path.string() + ":" + std::to_string(lineno) + ": " + p.error());
    out.push_back(std::move(p).value());
  }
  return out;
}

Expected<bool, std::string> write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return unexpected("cannot write " + path.string());
  for (const auto& p : dataset) out << pair_line(p) << '\n';
  if (!out) return unexpected("write failed for " + path.string());
  return true;
}

nlohmann::json finetune_record(const DialoguePair& pair) {
  nlohmann::json j;
  j["instruction"] =
      llm::system_text(llm::default_bundle()) + "\n\nPatient: " + pair.patient_request;
  j["output"] = llm::render_section(llm::SectionTag::kCommand, pair.canonical_command) + "\n" +
                llm::render_section(llm::SectionTag::kResponse, pair.nurse_response);
  return j;
}

Expected<bool, std::string> export_finetune(const Dataset& dataset,
                                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return unexpected("cannot write " + path.string());
  for (const auto& p : dataset) out << finetune_record(p).dump() << '\n';
  if (!out) return unexpected("write failed for " + path.string());
  return true;
}

std::vector<std::string> provenance_violations(const Dataset& dataset) {
  std::map<std::string, const DialoguePair*> by_id;
  for (const auto& p : dataset) by_id[p.id] = &p;
  std::vector<std::string> bad;
  for (const auto& p : dataset) {
    if (p.clarity == Clarity::kHigh) {
      if (p.parent_id) bad.push_back(p.id);
      continue;
    }
    if (!p.parent_id) {
      bad.push_back(p.id);
      continue;
    }
    auto it = by_id.find(*p.parent_id);
    if (it == by_id.end()) {
      bad.push_back(p.id);
      continue;
    }
    const auto& parent = *it->second;
    if (parent.clarity != Clarity::kHigh || parent.action_label != p.action_label ||
        parent.canonical_command != p.canonical_command ||
        parent.nurse_response != p.nurse_response) {
      bad.push_back(p.id);
    }
  }
  return bad;
}

}  // namespace aoecr::forge
