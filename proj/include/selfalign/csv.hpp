#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace selfalign::csv {

/// Quotes a field per RFC 4180 when it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Joins fields into one CSV record (no trailing newline).
std::string join(const std::vector<std::string>& fields);

/// Splits one CSV record into fields, honoring quoted fields with doubled
/// quotes. Embedded newlines are not supported (the emitters never produce
/// them). Throws LoadError on unbalanced quotes.
std::vector<std::string> split(std::string_view record);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace selfalign::csv
