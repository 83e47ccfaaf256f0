#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace molerun {

/// Shortest decimal string that parses back to exactly `x`. Integral values
/// keep a trailing ".0" so reals never read as integers ("10.0", "2.5",
/// "1e+20", "inf", "nan").
std::string format_real(double x);

std::optional<double> parse_real(std::string_view text);
std::optional<std::int64_t> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace molerun
