#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cexrepair {

using BigInt = boost::multiprecision::cpp_int;

std::string to_string(const BigInt &v);
/// Parses an optionally signed decimal integer; rejects anything else.
std::optional<BigInt> parse_bigint(std::string_view text);

std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::string join(const std::vector<std::string> &parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
/// Drops trailing whitespace on every line and trailing blank lines.
std::string normalize_trailing_whitespace(std::string_view s);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path &p);
void write_file(const std::filesystem::path &p, std::string_view content);

} // namespace cexrepair
