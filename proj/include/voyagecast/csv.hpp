#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace voyagecast::csv {

/// Splits one CSV line. Double-quoted fields may contain commas; `""` inside
/// quotes is a literal quote. A trailing '\r' is ignored.
std::vector<std::string> split_line(std::string_view line);

/// Quotes the field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Whole-string numeric parses; surrounding blanks are rejected.
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Fixed notation with the given number of decimals.
std::string format_fixed(double value, int decimals);

}  // namespace voyagecast::csv
