#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sptlaw/types.hpp"

namespace sptlaw {

enum class TokenSource : std::uint8_t { General = 0, Domain = 1 };

struct ScheduleSegment {
  TokenCount start;
  TokenCount end;  // exclusive
  TokenSource source = TokenSource::General;
};

/// Deterministic token-interleaving plan. Segments are contiguous,
/// non-overlapping, and cover [0, T) exactly; every granularity-aligned
/// prefix past the SCPT start carries a domain fraction within one
/// granularity unit of delta.
struct MixtureSchedule {
  RunConfig config;
  std::optional<double> epochs;  // delta*T/|D_dom| when the corpus size is known
  std::vector<ScheduleSegment> segments;
  // Global token positions where domain repetition wraps to a new epoch;
  // empty when the corpus size is unknown.
  std::vector<TokenCount> epoch_wrap_points;
  TokenCount granularity;
  std::uint64_t seed = 0;
};

/// E = T * delta / |D_dom|, evaluated in exact rational arithmetic before
/// the final conversion to double. Throws DomainError when the corpus is
/// empty but delta > 0.
double epochs(TokenCount pretrain_tokens, MixtureFraction delta,
              TokenCount domain_size);

/// The same quantity as a reduced exact rational; throws Error when the
/// reduced terms do not fit 64 bits.
std::pair<std::uint64_t, std::uint64_t> epochs_ratio(TokenCount pretrain_tokens,
                                                     MixtureFraction delta,
                                                     TokenCount domain_size);

/// Builds the interleaving plan. Domain chunks are placed by a seeded
/// error-accumulator (largest remainder) walk over granularity-sized
/// chunks, so realized prefix fractions track delta uniformly rather than
/// only in expectation. The seed sets the accumulator phase.
MixtureSchedule build_schedule(const RunConfig& config, TokenCount granularity,
                               std::uint64_t seed);

struct ScheduleSummary {
  std::optional<double> epochs;  // realized domain tokens / |D_dom|
  TokenCount domain_tokens;
  TokenCount general_tokens;
  // Largest |prefix domain fraction - delta| over post-start prefixes,
  // expressed in granularity units; guaranteed below 1.
  double max_prefix_deviation = 0.0;
};

ScheduleSummary schedule_summary(const MixtureSchedule& schedule);

/// One segment per line: {"start":..,"end":..,"source":"domain"|"general"}.
std::string schedule_to_jsonl(const MixtureSchedule& schedule);

/// Compact run-length records: u64 start, u64 end, u8 source (1 = domain),
/// little-endian.
std::vector<std::uint8_t> schedule_to_binary(const MixtureSchedule& schedule);

}  // namespace sptlaw
