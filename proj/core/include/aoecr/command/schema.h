#pragma once

#include <string_view>

namespace aoecr::command {

/// JSON Schema of the canonical command document. docs/command_schema.json
/// holds the same bytes.
std::string_view command_schema_json();

}  // namespace aoecr::command
