#include "aoecr/llm/task.h"

#include <cctype>

namespace aoecr::llm {

namespace {

bool is_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isupper(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

std::string one_line(std::string_view v) {
  std::string out(v);
  for (auto& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

std::optional<std::string> TaskBlock::field(const std::string& key) const {
  auto it = fields.find(key);
  if (it == fields.end()) return std::nullopt;
  return it->second;
}

std::string render_task(const TaskBlock& block) {
  std::string out = "TASK: " + block.task + "\n";
  for (const auto& [k, v] : block.fields) out += k + ": " + one_line(v) + "\n";
  if (!block.instructions.empty()) out += "\n" + block.instructions;
  return out;
}

std::optional<TaskBlock> parse_task(std::string_view text) {
  TaskBlock block;
  bool have_task = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) break;
    const auto colon = line.find(": ");
    if (colon == std::string_view::npos || !is_key(line.substr(0, colon))) break;
    const std::string key(line.substr(0, colon));
    std::string value(line.substr(colon + 2));
    if (key == "TASK") {
      block.task = value;
      have_task = true;
    } else {
      block.fields[key] = std::move(value);
    }
  }
  if (!have_task) return std::nullopt;
  if (pos < text.size()) block.instructions = std::string(text.substr(pos));
  return block;
}

}  // namespace aoecr::llm
