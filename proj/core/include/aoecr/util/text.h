#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace aoecr::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Lowercased words with surrounding punctuation stripped; empty words dropped.
std::vector<std::string> words(std::string_view s);

/// Whitespace-separated tokens, punctuation kept.
std::vector<std::string> split_ws(std::string_view s);
/// Splits on every `delim`; empty fields are kept.
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Index of the first occurrence of the word sequence `needle` in `hay`, or npos.
std::size_t find_words(const std::vector<std::string>& hay, const std::vector<std::string>& needle);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s, std::uint64_t basis = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

}  // namespace aoecr::text
