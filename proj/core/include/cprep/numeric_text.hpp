#pragma once

#include <string>
#include <string_view>

namespace cprep {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Strict full-string double parse; throws std::invalid_argument otherwise.
double parse_double(std::string_view text);

/// Rounded to six significant digits, for human-facing tables.
std::string format_sig6(double value);

}  // namespace cprep
