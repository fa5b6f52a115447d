#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace geoeval::text {

// Lowercases ASCII, Latin-1, Latin Extended-A/B (common letters), Latin
// Extended Additional, Greek and Cyrillic. No accent folding. Malformed UTF-8
// bytes are copied through unchanged.
std::string utf8_lower(std::string_view s);

std::string_view trim_ascii(std::string_view s);

// Plain comma split, no quoting.
std::vector<std::string> split_csv_line(std::string_view line);

// Reads a text file into lines, stripping '\r' and a leading UTF-8 BOM.
std::vector<std::string> read_lines(const std::string& path, const char* module);

std::string read_file(const std::string& path, const char* module);

// Two decimals, half-up, of `fraction * 100`.
std::string format_percent(double fraction);

}  // namespace geoeval::text
