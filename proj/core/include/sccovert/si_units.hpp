#pragma once

#include <string>
#include <string_view>

namespace sccovert {

// Parses "10M", "2mV", "1u", "0.1", "40kbit/s", "1e-3". Accepted prefixes are
// p n u m k M G; an optional unit (V A Ohm Hz F s bit/s bps) may follow.
// The scaling is applied in decimal, so "10m" parses to exactly 0.01.
// Throws std::invalid_argument.
double parse_si(std::string_view text);

// Shortest engineering-notation text such that parse_si(format_si(x)) == x.
std::string format_si(double value);

}  // namespace sccovert
