#include "sptlaw/types.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace sptlaw {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

void reduce(u64& num, u64& den) {
  if (num == 0) {
    den = 1;
    return;
  }
  const u64 g = std::gcd(num, den);
  num /= g;
  den /= g;
}

double ratio_to_double(u64 num, u64 den) {
  // Both operands of one division: correctly rounded when each converts
  // exactly, which holds for all rationals this type constructs.
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MixtureFraction::MixtureFraction(double v) {
  if (!(v >= 0.0) || v > 1.0 || !std::isfinite(v)) {
    throw InvariantViolation("mixture fraction must lie in [0, 1], got " +
                             std::to_string(v));
  }
  if (v == 0.0) {
    num_ = 0;
    den_ = 1;
    value_ = 0.0;
    return;
  }
  // Exact binary expansion: v = m * 2^e with m a 53-bit integer.
  int exp = 0;
  double mant = std::frexp(v, &exp);  // v = mant * 2^exp, mant in [0.5, 1)
  u64 m = static_cast<u64>(std::ldexp(mant, 53));
  int e = exp - 53;
  while (m != 0 && (m & 1) == 0) {
    m >>= 1;
    ++e;
  }
  if (e >= 0) {
    // v >= 1, so v == 1 exactly here.
    num_ = 1;
    den_ = 1;
  } else {
    num_ = m;
    den_ = u64(1) << static_cast<unsigned>(-e);
  }
  value_ = v;
}

MixtureFraction MixtureFraction::from_ratio(u64 num, u64 den) {
  if (den == 0) throw InvariantViolation("mixture fraction denominator is zero");
  if (num > den) throw InvariantViolation("mixture fraction exceeds 1");
  reduce(num, den);
  return MixtureFraction(num, den, ratio_to_double(num, den));
}

MixtureFraction MixtureFraction::parse(const std::string& text) {
  std::string s = text;
  // Trim surrounding whitespace.
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  bool percent = false;
  if (!s.empty() && s.back() == '%') {
    percent = true;
    s.pop_back();
  }
  if (s.empty()) throw FormatError("empty mixture fraction");

  // Decimal forms parse into an exact rational; anything else (e.g.
  // scientific notation) falls back to the double constructor.
  bool plain_decimal = true;
  int dot_count = 0;
  for (char c : s) {
    if (c == '.') {
      ++dot_count;
    } else if (!std::isdigit(static_cast<unsigned char>(c))) {
      plain_decimal = false;
      break;
    }
  }
  if (plain_decimal && dot_count <= 1 && s != ".") {
    u128 num = 0;
    u64 den = 1;
    bool after_dot = false;
    for (char c : s) {
      if (c == '.') {
        after_dot = true;
        continue;
      }
      num = num * 10 + static_cast<unsigned>(c - '0');
      if (after_dot) {
        if (den > std::numeric_limits<u64>::max() / 10) {
          throw FormatError("mixture fraction has too many digits: " + text);
        }
        den *= 10;
      }
      if (num > u128(std::numeric_limits<u64>::max()) / 100) {
        throw FormatError("mixture fraction has too many digits: " + text);
      }
    }
    u64 n = static_cast<u64>(num);
    u64 d = den;
    if (percent) {
      if (d > std::numeric_limits<u64>::max() / 100) {
        throw FormatError("mixture fraction has too many digits: " + text);
      }
      d *= 100;
    }
    if (n > d) throw InvariantViolation("mixture fraction exceeds 1: " + text);
    return from_ratio(n, d);
  }

  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == nullptr || *end != '\0') {
    throw FormatError("cannot parse mixture fraction: " + text);
  }
  if (percent) v /= 100.0;
  return MixtureFraction(v);
}

std::string to_string(Split s) {
  switch (s) {
    case Split::DomainTrain:
      return "domain_train";
    case Split::DomainTest:
      return "domain_test";
    case Split::General:
      return "general";
  }
  return "unknown";
}

Split split_from_string(const std::string& s) {
  if (s == "domain_train" || s == "train") return Split::DomainTrain;
  if (s == "domain_test" || s == "test") return Split::DomainTest;
  if (s == "general") return Split::General;
  throw FormatError("unknown split: " + s);
}

void LossCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.loss > 0.0) || !std::isfinite(p.loss)) {
      throw InvariantViolation("loss must be positive and finite in curve " +
                               run_id);
    }
    if (i > 0 && !(points[i - 1].tokens < p.tokens)) {
      throw InvariantViolation("curve " + run_id +
                               " token abscissae are not strictly increasing");
    }
  }
}

void RunConfig::validate() const {
  if (!delta.is_zero() && domain_dataset_tokens.has_value() &&
      domain_dataset_tokens->value == 0) {
    throw InvalidConfig("run " + run_id +
                        ": domain dataset size must be positive when delta > 0");
  }
  if (scpt_start_tokens.has_value() &&
      scpt_start_tokens->value >= pretrain_budget_tokens.value) {
    throw InvalidConfig("run " + run_id +
                        ": scpt start must precede the pretraining budget");
  }
}

void OverfitLawParams::validate() const {
  auto fail = [](const std::string& what) { throw InvariantViolation(what); };
  if (!(a_train > 0)) fail("a_train must be positive");
  if (!(b_train_g < 0)) fail("b_train_g must be negative");
  if (!(b_train_s < 0)) fail("b_train_s must be negative");
  if (std::abs(b_train_s) < std::abs(b_train_g)) {
    fail("|b_train_s| must be at least |b_train_g|");
  }
  if (!(b_gap_g < 0)) fail("b_gap_g must be negative");
  if (!(b_gap_s > 0)) fail("b_gap_s must be positive");
  if (!(alpha1 >= 0)) fail("alpha1 must be nonnegative");
  if (!(alpha2 > 0)) fail("alpha2 must be positive");
  if (!(kappa2 > 0)) fail("kappa2 must be positive");
  if (token_unit.value == 0) fail("token_unit must be positive");
}

void DeltaTestLawParams::validate() const {
  if (!(a >= 0)) throw InvariantViolation("delta-test a must be nonnegative");
  if (!(b <= 0)) throw InvariantViolation("delta-test b must be nonpositive");
  if (!(c >= 0)) throw InvariantViolation("delta-test c must be nonnegative");
  if (token_unit.value == 0) throw InvariantViolation("token_unit must be positive");
}

}  // namespace sptlaw
