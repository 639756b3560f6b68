#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace amc::io {

/// Locale-independent number formatting and parsing.
std::string format_real(double v, int digits);
double to_real(std::string_view token);
std::uint64_t to_count(std::string_view token);

void split_whitespace(std::string_view line, std::vector<std::string_view>& out);

}  // namespace amc::io
