#pragma once

#include <ostream>
#include <string>
#include <string_view>

namespace exid {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Parses a full string as a double; throws ParseError on trailing garbage.
double parse_double(std::string_view text, int line = 0);

long long parse_int(std::string_view text, int line = 0);

}  // namespace exid
