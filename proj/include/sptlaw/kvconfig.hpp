#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sptlaw/cost.hpp"
#include "sptlaw/fit.hpp"
#include "sptlaw/types.hpp"

namespace sptlaw {

/// Plain-text config: one `key = value` per line, `#` comments, blank
/// lines ignored. Unknown keys throw FormatError so typos fail fast.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::optional<std::string> maybe(const std::string& key) const;

  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  TokenCount get_tokens(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& entries() const { return values_; }
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
};

// key=value round trips for the configurable types.
KvConfig to_kv(const FitOptions& o);
FitOptions fit_options_from_kv(const KvConfig& kv);

KvConfig to_kv(const CostModel& m);
CostModel cost_model_from_kv(const KvConfig& kv);

KvConfig to_kv(const OverfitLawParams& p);
OverfitLawParams overfit_params_from_kv(const KvConfig& kv);

KvConfig to_kv(const SyntheticSpec& s);
SyntheticSpec synthetic_spec_from_kv(const KvConfig& kv);

/// Grid forms accepted anywhere a token grid is configured:
///   "log:1B:200B:20"  20 log-spaced points between 1B and 200B
///   "lin:1B:200B:20"  20 evenly spaced points
///   "1B,2B,5B"        explicit strictly increasing list
std::vector<TokenCount> parse_token_grid(const std::string& text);

}  // namespace sptlaw
