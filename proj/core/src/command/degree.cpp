#include "aoecr/command/degree.h"

#include "aoecr/util/text.h"

namespace aoecr::command {

DegreeTable DegreeTable::defaults() {
  return DegreeTable({
      {"slightly", {"slightly", "a little"}, 0.25},
      {"a_bit", {"a bit"}, 0.40},
      {"halfway", {"halfway", "half way"}, 0.50},
      {"mostly", {"mostly"}, 0.75},
      {"fully", {"fully", "all the way"}, 1.00},
  });
}

DegreeTable::DegreeTable(std::vector<DegreeModifier> entries) : entries_(std::move(entries)) {}

const DegreeModifier* DegreeTable::find_key(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

std::optional<DegreeModifier> DegreeTable::match(std::string_view text) const {
  const auto hay = text::words(text);
  std::size_t best = std::string::npos;
  const DegreeModifier* found = nullptr;
  for (const auto& e : entries_) {
    for (const auto& form : e.surface_forms) {
      const auto pos = text::find_words(hay, text::words(form));
      if (pos != std::string::npos && (best == std::string::npos || pos < best)) {
        best = pos;
        found = &e;
      }
    }
  }
  if (!found) return std::nullopt;
  return *found;
}

double DegreeTable::fraction_for(std::string_view key) const {
  const auto* e = find_key(key);
  return e ? e->extent_fraction : 1.0;
}

void DegreeTable::set_fraction(std::string_view key, double fraction) {
  for (auto& e : entries_) {
    if (e.key == key) {
      e.extent_fraction = fraction;
      return;
    }
  }
  std::string k(key);
  std::string form = k;
  for (auto& c : form) {
    if (c == '_') c = ' ';
  }
  entries_.push_back({k, {form}, fraction});
}

}  // namespace aoecr::command
