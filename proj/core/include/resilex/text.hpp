#pragma once

// Small text helpers shared by the line-oriented file formats.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace resilex::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Strict full-field parses; return false on trailing garbage or overflow.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, std::int64_t& out);
bool parse_uint(std::string_view s, std::uint64_t& out);

/// Parses `key=value` pairs separated by whitespace, e.g. a `#!` directive.
std::vector<std::pair<std::string, std::string>> parse_directives(std::string_view s);

/// 64-bit FNV-1a digest, rendered as 16 hex digits.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace resilex::text
