#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sptlaw/cost.hpp"
#include "sptlaw/forecast.hpp"
#include "sptlaw/mixture.hpp"
#include "sptlaw/types.hpp"

namespace sptlaw {

using json = nlohmann::json;  // std::map-backed: keys serialize sorted

json to_json(const OverfitLawParams& p);
OverfitLawParams overfit_params_from_json(const json& j);

json to_json(const DeltaTestLawParams& p);
DeltaTestLawParams delta_test_params_from_json(const json& j);

json to_json(const FitReport& r);
json to_json(const ForecastPoint& p);
json to_json(const MixturePlan& plan);
json to_json(const CostModel& m);
json to_json(const ScheduleSummary& s);

/// Deterministic machine-readable wrapper every CLI command emits:
/// identical inputs and seed produce identical bytes.
struct ReportEnvelope {
  std::string tool_version;
  std::string command;
  std::string inputs_digest;
  std::uint64_t seed = 0;
  json payload;
  std::vector<std::string> warnings;

  json to_json() const;
  std::string dump() const;  // 2-space indent, trailing newline
};

/// FNV-1a 64-bit over the given byte strings, in order, each prefixed by
/// its length so boundaries matter. Rendered "fnv1a64:<16 hex digits>".
std::string digest_inputs(const std::vector<std::string>& contents);

/// Writes via a temporary file plus rename: a failed run never leaves a
/// truncated output behind. "-" writes to stdout.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file_or_stdin(const std::string& path);

}  // namespace sptlaw
