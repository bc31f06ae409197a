#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parsers. Everything here works on bytes;
// only ASCII whitespace and ASCII letters are treated specially.
namespace simagent::text {

std::string_view trim(std::string_view s);
std::string_view trim_left(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits on every occurrence of `delim`; empty fields are kept.
std::vector<std::string_view> split(std::string_view s, char delim);

/// Splits into lines on '\n', dropping a trailing '\r' from each line. A final
/// empty line after a trailing newline is not reported.
std::vector<std::string_view> lines(std::string_view s);

bool istarts_with(std::string_view s, std::string_view prefix);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

/// Backslash escaping of '\\', '\n', '\r' and '\t' so a value fits on one
/// tab-separated line.
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

/// Whole-file read; throws std::runtime_error naming the path on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace simagent::text
