#pragma once

#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "aoecr/util/expected.h"

namespace aoecr::llm {

// Emissions carry their parts in tagged fences:
//
//   ```command
//   {"kind":"single",...}
//   ```
//   ```response
//   Of course, raising the backrest now.
//   ```
enum class SectionTag { kCommand, kResponse, kClassification, kVerdict, kQuestion };

std::string_view to_string(SectionTag t);
std::optional<SectionTag> section_tag_from_string(std::string_view s);

using Sections = std::map<SectionTag, std::string>;

struct ExtractError {
  SectionTag missing;

  std::string message() const;
};

/// Collects every tagged fence in `emission`; text outside fences is ignored
/// and the first fence of a tag wins. Fails if any `required` tag is absent.
Expected<Sections, ExtractError> extract_sections(std::string_view emission,
                                                  std::initializer_list<SectionTag> required = {});

std::string render_section(SectionTag tag, std::string_view body);

}  // namespace aoecr::llm
