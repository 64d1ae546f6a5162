#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace satstack {

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
/// Later keys override earlier ones. Throws Error{parse_error} on a line
/// without '='.
std::map<std::string, std::string> parse_key_values(std::string_view text);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace satstack
