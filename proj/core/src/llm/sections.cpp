#include "aoecr/llm/sections.h"

#include "aoecr/util/text.h"

namespace aoecr::llm {

std::string_view to_string(SectionTag t) {
  switch (t) {
    case SectionTag::kCommand:
      return "command";
    case SectionTag::kResponse:
      return "response";
    case SectionTag::kClassification:
      return "classification";
    case SectionTag::kVerdict:
      return "verdict";
    case SectionTag::kQuestion:
      return "question";
  }
  return "unknown";
}

std::optional<SectionTag> section_tag_from_string(std::string_view s) {
  for (auto t : {SectionTag::kCommand, SectionTag::kResponse, SectionTag::kClassification,
                 SectionTag::kVerdict, SectionTag::kQuestion}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string ExtractError::message() const {
  return "missing section: " + std::string(to_string(missing));
}

Expected<Sections, ExtractError> extract_sections(std::string_view emission,
                                                  std::initializer_list<SectionTag> required) {
  Sections out;
  std::size_t pos = 0;
  bool in_fence = false;
  std::optional<SectionTag> current;
  std::string body;
  while (pos <= emission.size()) {
    auto eol = emission.find('\n', pos);
    if (eol == std::string_view::npos) eol = emission.size();
    const auto line = emission.substr(pos, eol - pos);
    const auto trimmed = text::trim(line);
    if (!in_fence) {
      if (trimmed.rfind("```", 0) == 0 && trimmed.size() > 3) {
        in_fence = true;
        current = section_tag_from_string(text::to_lower(text::trim(trimmed.substr(3))));
        body.clear();
      }
    } else if (trimmed == "```") {
      if (current && !out.contains(*current)) out.emplace(*current, text::trim(body));
      in_fence = false;
      current.reset();
    } else {
      if (!body.empty()) body += '\n';
      body += line;
    }
    if (eol == emission.size()) break;
    pos = eol + 1;
  }
  for (auto tag : required) {
    if (!out.contains(tag)) return unexpected(ExtractError{tag});
  }
  return out;
}

std::string render_section(SectionTag tag, std::string_view body) {
  std::string out = "```";
  out += to_string(tag);
  out += '\n';
  out += body;
  out += "\n```";
  return out;
}

}  // namespace aoecr::llm
