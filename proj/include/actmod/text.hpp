#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small helpers for the line-oriented text formats.
namespace actmod::text {

std::vector<std::string> split(std::string_view line, char delim);
std::vector<std::string> split_whitespace(std::string_view line);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_blank_or_comment(std::string_view line);

// Parse helpers throw DataError mentioning `where` on malformed input.
double parse_double(std::string_view s, const std::string& where);
std::int64_t parse_int(std::string_view s, const std::string& where);
std::size_t parse_size(std::string_view s, const std::string& where);

}  // namespace actmod::text
