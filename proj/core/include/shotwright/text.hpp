#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small helpers shared by the text file formats.
namespace shotwright::text {

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

/// Whole-string parses; throw shotwright::Error on junk or overflow.
long long parse_int(std::string_view s);
double parse_double(std::string_view s);
bool parse_bool(std::string_view s);

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace shotwright::text
