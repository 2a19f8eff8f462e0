#include "sccovert/si_units.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace sccovert {

namespace {

constexpr std::array<std::pair<std::string_view, int>, 8> kPrefixes{{
    {"p", -12}, {"n", -9}, {"u", -6}, {"\xC2\xB5", -6}, {"m", -3}, {"k", 3}, {"M", 6}, {"G", 9}}};

constexpr std::array<std::string_view, 11> kUnits{
    "", "V", "A", "Ohm", "ohm", "\xCE\xA9", "Hz", "F", "s", "bit/s", "bps"};

bool is_unit(std::string_view s) {
  for (auto u : kUnits)
    if (s == u) return true;
  return false;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::string_view text) {
  throw std::invalid_argument("cannot parse quantity '" + std::string(text) + "'");
}

}  // namespace

double parse_si(std::string_view text) {
  const std::string_view s = trim(text);
  double probe = 0.0;
  const auto num = std::from_chars(s.data(), s.data() + s.size(), probe);
  if (num.ec != std::errc() || num.ptr == s.data()) fail(text);

  const std::string_view mantissa(s.data(), static_cast<std::size_t>(num.ptr - s.data()));
  const std::string_view rest = trim(s.substr(mantissa.size()));

  int shift = 0;
  if (!is_unit(rest)) {
    bool matched = false;
    for (auto [prefix, exp] : kPrefixes) {
      if (rest.substr(0, prefix.size()) == prefix && is_unit(rest.substr(prefix.size()))) {
        shift = exp;
        matched = true;
        break;
      }
    }
    if (!matched) fail(text);
  }
  if (shift == 0) return probe;

  // Fold the prefix into the decimal exponent and let from_chars round once.
  std::string digits(mantissa);
  int exponent = 0;
  if (const auto e = digits.find_first_of("eE"); e != std::string::npos) {
    const std::string_view tail(digits.data() + e + 1, digits.size() - e - 1);
    if (std::from_chars(tail.data(), tail.data() + tail.size(), exponent).ec != std::errc()) fail(text);
    digits.resize(e);
  }
  const std::string scaled = digits + "e" + std::to_string(exponent + shift);
  double value = 0.0;
  const auto res = std::from_chars(scaled.data(), scaled.data() + scaled.size(), value);
  if (res.ec != std::errc()) fail(text);
  return value;
}

std::string format_si(double value) {
  if (value == 0.0 || !std::isfinite(value)) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, r.ptr);
  }
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
  const std::string sci(buf, r.ptr);

  const auto e = sci.find('e');
  const int exponent = std::stoi(sci.substr(e + 1));
  std::string digits;
  bool negative = false;
  for (char c : sci.substr(0, e)) {
    if (c == '-') negative = true;
    else if (c != '.') digits.push_back(c);
  }

  // Outside the prefix range: plain scientific text.
  if (exponent < -12 || exponent > 11) return sci;
  const int group = exponent >= 0 ? exponent / 3 * 3 : -((-exponent + 2) / 3 * 3);
  std::string_view prefix;
  for (auto [p, exp] : kPrefixes)
    if (exp == group && p != "\xC2\xB5") prefix = p;

  // Value is 0.<digits> * 10^(exponent + 1); place the point for 10^group.
  const int int_digits = exponent - group + 1;
  std::string out = negative ? "-" : "";
  if (int_digits <= 0) {
    out += "0." + std::string(static_cast<std::size_t>(-int_digits), '0') + digits;
  } else if (static_cast<std::size_t>(int_digits) >= digits.size()) {
    out += digits + std::string(static_cast<std::size_t>(int_digits) - digits.size(), '0');
  } else {
    out += digits.substr(0, static_cast<std::size_t>(int_digits)) + "." +
           digits.substr(static_cast<std::size_t>(int_digits));
  }
  return out + std::string(prefix);
}

}  // namespace sccovert
