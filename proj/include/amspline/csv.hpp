#pragma once
// Minimal RFC-4180 helpers.  Numbers are written with std::to_chars, so the
// output is locale-independent and round-trips exactly.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amspline::csv {

// Splits one record; quoted fields may contain commas and doubled quotes.
// Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_record(std::string_view line);

// Parses a full double (surrounding blanks allowed); nullopt otherwise.
std::optional<double> parse_double(std::string_view field);

std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);  // "NA" when empty
std::string quote(std::string_view field);

// Joins already-formatted fields with commas.
std::string join(const std::vector<std::string>& fields);

}  // namespace amspline::csv
