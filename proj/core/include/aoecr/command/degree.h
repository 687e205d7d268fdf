#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aoecr::command {

struct DegreeModifier {
  std::string key;                         // e.g. "a_bit"
  std::vector<std::string> surface_forms;  // e.g. {"a bit"}
  double extent_fraction = 1.0;            // (0, 1]
};

class DegreeTable {
 public:
  /// slightly 0.25, a_bit 0.40, halfway 0.50, mostly 0.75, fully 1.00.
  static DegreeTable defaults();

  explicit DegreeTable(std::vector<DegreeModifier> entries);

  const DegreeModifier* find_key(std::string_view key) const;

  /// Earliest whole-word, case-insensitive match of any surface form in text.
  std::optional<DegreeModifier> match(std::string_view text) const;

  /// Fraction for a key; unknown keys map to 1.0.
  double fraction_for(std::string_view key) const;

  /// Overrides (or adds) an entry's fraction.
  void set_fraction(std::string_view key, double fraction);

  const std::vector<DegreeModifier>& entries() const { return entries_; }

 private:
  std::vector<DegreeModifier> entries_;
};

}  // namespace aoecr::command
