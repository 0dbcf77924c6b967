#pragma once

#include <string>
#include <string_view>

namespace pwsml {

/// Shortest decimal that round-trips (used in manifests and echoes).
std::string format_short(double value);

/// Seventeen significant digits, "%.17g" (used for CSV and model files).
std::string format_g17(double value);

/// Strict full-string parse; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out) noexcept;
bool parse_int(std::string_view text, long long& out) noexcept;

std::string_view trim(std::string_view text) noexcept;

}  // namespace pwsml
