#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtlflow {

// Lossless decimal for doubles: 17 significant digits, locale independent.
std::string format_double(double value, int significant_digits = 17);

// Fixed-point with `decimals` places, for human-facing tables.
std::string format_fixed(double value, int decimals);

// Strict parsers: the whole token must be consumed. Return false on failure.
bool parse_double(std::string_view text, double& out);
bool parse_size(std::string_view text, std::size_t& out);
bool parse_u64(std::string_view text, std::uint64_t& out);

std::string_view trim(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char delimiter);

}  // namespace mtlflow
