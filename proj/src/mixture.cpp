#include "sptlaw/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sptlaw {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

u128 gcd128(u128 a, u128 b) {
  while (b != 0) {
    const u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

double u128_to_double(u128 v) {
  return std::ldexp(static_cast<double>(static_cast<u64>(v >> 64)), 64) +
         static_cast<double>(static_cast<u64>(v));
}

double ratio_to_double(u128 num, u128 den) {
  const u128 g = gcd128(num, den);
  num /= g;
  den /= g;
  constexpr u128 kExact = u128(1) << 53;
  if (num < kExact && den < kExact) {
    // Single correctly-rounded division.
    return static_cast<double>(static_cast<u64>(num)) /
           static_cast<double>(static_cast<u64>(den));
  }
  return u128_to_double(num) / u128_to_double(den);
}

u64 splitmix64(u64 x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double epochs(TokenCount pretrain_tokens, MixtureFraction delta,
              TokenCount domain_size) {
  if (delta.is_zero()) return 0.0;
  if (domain_size.value == 0) {
    throw DomainError("domain corpus size must be positive when delta > 0");
  }
  const u128 num = u128(pretrain_tokens.value) * delta.num();
  const u128 den = u128(delta.den()) * domain_size.value;
  return ratio_to_double(num, den);
}

std::pair<u64, u64> epochs_ratio(TokenCount pretrain_tokens,
                                 MixtureFraction delta, TokenCount domain_size) {
  if (delta.is_zero()) return {0, 1};
  if (domain_size.value == 0) {
    throw DomainError("domain corpus size must be positive when delta > 0");
  }
  u128 num = u128(pretrain_tokens.value) * delta.num();
  u128 den = u128(delta.den()) * domain_size.value;
  const u128 g = gcd128(num, den);
  num /= g;
  den /= g;
  constexpr u128 kMax = std::numeric_limits<u64>::max();
  if (num > kMax || den > kMax) {
    throw Error("reduced epoch ratio exceeds 64 bits");
  }
  return {static_cast<u64>(num), static_cast<u64>(den)};
}

MixtureSchedule build_schedule(const RunConfig& config, TokenCount granularity,
                               std::uint64_t seed) {
  config.validate();
  if (granularity.value == 0) throw InvalidConfig("granularity must be positive");
  const u64 total = config.pretrain_budget_tokens.value;
  if (total == 0) throw InvalidConfig("pretraining budget must be positive");
  const u64 start = config.scpt_start_tokens.value_or(TokenCount{0}).value;
  if (!config.delta.is_zero() && config.domain_dataset_tokens.has_value() &&
      config.domain_dataset_tokens->value == 0) {
    throw InvalidConfig("domain corpus size must be positive when delta > 0");
  }

  MixtureSchedule sched;
  sched.config = config;
  sched.granularity = granularity;
  sched.seed = seed;

  auto push = [&](u64 seg_start, u64 seg_end, TokenSource src) {
    if (seg_start == seg_end) return;
    if (!sched.segments.empty() && sched.segments.back().source == src &&
        sched.segments.back().end.value == seg_start) {
      sched.segments.back().end = TokenCount{seg_end};
    } else {
      sched.segments.push_back({TokenCount{seg_start}, TokenCount{seg_end}, src});
    }
  };

  if (start > 0) push(0, start, TokenSource::General);

  if (config.delta.is_zero()) {
    push(start, total, TokenSource::General);
  } else {
    const u128 num = config.delta.num();
    const u128 den = config.delta.den();
    u128 acc = splitmix64(seed) % den;

    const u64 dom_size = config.domain_dataset_tokens.has_value()
                             ? config.domain_dataset_tokens->value
                             : 0;
    u64 domain_cum = 0;
    u64 next_wrap = dom_size;

    u64 pos = start;
    while (pos < total) {
      const u64 chunk_end = std::min(total, pos + granularity.value);
      acc += num;
      if (acc >= den) {
        acc -= den;
        push(pos, chunk_end, TokenSource::Domain);
        if (dom_size > 0) {
          const u64 chunk_len = chunk_end - pos;
          while (next_wrap <= domain_cum + chunk_len) {
            sched.epoch_wrap_points.push_back(
                TokenCount{pos + (next_wrap - domain_cum)});
            next_wrap += dom_size;
          }
          domain_cum += chunk_len;
        }
      } else {
        push(pos, chunk_end, TokenSource::General);
      }
      pos = chunk_end;
    }

    if (config.domain_dataset_tokens.has_value()) {
      sched.epochs = epochs(config.pretrain_budget_tokens, config.delta,
                            *config.domain_dataset_tokens);
    }
  }
  if (config.delta.is_zero()) sched.epochs = 0.0;
  return sched;
}

ScheduleSummary schedule_summary(const MixtureSchedule& schedule) {
  ScheduleSummary sum;
  const u64 start =
      schedule.config.scpt_start_tokens.value_or(TokenCount{0}).value;
  const u128 num = schedule.config.delta.num();
  const u128 den = schedule.config.delta.den();
  const double g = static_cast<double>(schedule.granularity.value);

  u64 domain = 0;
  u64 general = 0;
  double max_dev_tokens = 0.0;
  for (const auto& seg : schedule.segments) {
    const u64 len = seg.end.value - seg.start.value;
    if (seg.source == TokenSource::Domain) {
      domain += len;
    } else {
      general += len;
    }
    // Deviation is piecewise linear in the prefix position, so segment
    // boundaries carry the extrema.
    if (seg.end.value > start) {
      const u128 prefix = seg.end.value - start;
      // |domain*den - num*prefix| / den, in tokens.
      const u128 lhs = u128(domain) * den;
      const u128 rhs = num * prefix;
      const u128 diff = lhs > rhs ? lhs - rhs : rhs - lhs;
      const double dev = u128_to_double(diff) / u128_to_double(den);
      max_dev_tokens = std::max(max_dev_tokens, dev);
    }
  }
  sum.domain_tokens = TokenCount{domain};
  sum.general_tokens = TokenCount{general};
  sum.max_prefix_deviation = schedule.granularity.value > 0
                                 ? max_dev_tokens / g
                                 : 0.0;
  if (schedule.config.domain_dataset_tokens.has_value() &&
      schedule.config.domain_dataset_tokens->value > 0) {
    sum.epochs = static_cast<double>(domain) /
                 static_cast<double>(schedule.config.domain_dataset_tokens->value);
  } else if (schedule.config.delta.is_zero()) {
    sum.epochs = 0.0;
  }
  return sum;
}

std::string schedule_to_jsonl(const MixtureSchedule& schedule) {
  std::string out;
  for (const auto& seg : schedule.segments) {
    out += "{\"start\":" + std::to_string(seg.start.value) +
           ",\"end\":" + std::to_string(seg.end.value) + ",\"source\":\"" +
           (seg.source == TokenSource::Domain ? "domain" : "general") + "\"}\n";
  }
  return out;
}

std::vector<std::uint8_t> schedule_to_binary(const MixtureSchedule& schedule) {
  std::vector<std::uint8_t> out;
  out.reserve(schedule.segments.size() * 17);
  auto put_u64 = [&](u64 v) {
    for (int i = 0; i < 8; ++i) {
      out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  };
  for (const auto& seg : schedule.segments) {
    put_u64(seg.start.value);
    put_u64(seg.end.value);
    out.push_back(static_cast<std::uint8_t>(seg.source));
  }
  return out;
}

}  // namespace sptlaw
