#include "sptlaw/units.hpp"

#include <cctype>
#include <limits>

namespace sptlaw {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u64 suffix_multiplier(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'K':
      return 1'000ULL;
    case 'M':
      return 1'000'000ULL;
    case 'B':
      return 1'000'000'000ULL;
    case 'T':
      return 1'000'000'000'000ULL;
    default:
      return 0;
  }
}

}  // namespace

TokenCount parse_token_count(const std::string& text) {
  std::string s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  if (s.empty()) throw FormatError("empty token count");

  u64 mult = 1;
  if (std::isalpha(static_cast<unsigned char>(s.back()))) {
    mult = suffix_multiplier(s.back());
    if (mult == 0) throw FormatError("unknown token suffix in: " + text);
    s.pop_back();
    if (s.empty()) throw FormatError("missing digits in token count: " + text);
  }

  // digits[.digits] only; the mantissa scales by the suffix in integer
  // arithmetic so "1.5B" stays exact.
  u128 mantissa = 0;
  u64 frac_scale = 1;
  bool after_dot = false;
  bool any_digit = false;
  for (char c : s) {
    if (c == '.') {
      if (after_dot || mult == 1) {
        throw FormatError("cannot parse token count: " + text);
      }
      after_dot = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw FormatError("cannot parse token count: " + text);
    }
    any_digit = true;
    mantissa = mantissa * 10 + static_cast<unsigned>(c - '0');
    if (after_dot) frac_scale *= 10;
    if (mantissa > u128(std::numeric_limits<u64>::max())) {
      throw FormatError("token count too large: " + text);
    }
  }
  if (!any_digit) throw FormatError("cannot parse token count: " + text);

  u128 total = mantissa * mult;
  if (total % frac_scale != 0) {
    throw FormatError("token count is not a whole number of tokens: " + text);
  }
  total /= frac_scale;
  if (total > u128(std::numeric_limits<u64>::max())) {
    throw FormatError("token count too large: " + text);
  }
  return TokenCount{static_cast<u64>(total)};
}

std::string format_token_count(TokenCount t) {
  const u64 v = t.value;
  struct Suffix {
    u64 scale;
    char tag;
  };
  static constexpr Suffix kSuffixes[] = {
      {1'000'000'000'000ULL, 'T'},
      {1'000'000'000ULL, 'B'},
      {1'000'000ULL, 'M'},
      {1'000ULL, 'K'},
  };
  if (v != 0) {
    for (const auto& s : kSuffixes) {
      if (v % s.scale == 0) {
        return std::to_string(v / s.scale) + s.tag;
      }
    }
  }
  return std::to_string(v);
}

}  // namespace sptlaw
