#pragma once

#include <map>
#include <string>
#include <vector>

#include "sptlaw/types.hpp"

namespace sptlaw {

enum class LogFormat { CSV, JSONL };

/// Multi-run dataset the fitter consumes. Gap series are derived, never
/// parsed: one exists per run whose DomainTrain and DomainTest curves
/// share token abscissae.
struct RunDataset {
  std::map<std::string, RunConfig> runs;
  std::vector<LossCurve> curves;
  std::vector<GapSeries> derived_gap_curves;

  const LossCurve* find_curve(const std::string& run_id, Split split) const;
  const GapSeries* find_gap(const std::string& run_id) const;
};

/// One pretrain-then-finetune measurement pair.
struct FinetuneOutcome {
  std::string run_id;
  MixtureFraction delta;
  TokenCount pretrain_tokens_at_ft;
  double best_post_ft_domain_loss = 0.0;
  double pt_domain_test_loss = 0.0;

  void validate() const;
};

struct ParseWarning {
  std::size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string message;
};

struct ParsedCurves {
  std::vector<LossCurve> curves;
  // delta per run_id, taken from the rows (consistent within a run).
  std::map<std::string, MixtureFraction> run_deltas;
  std::vector<ParseWarning> warnings;
};

/// Parses rows with schema (run_id, delta, split, tokens, loss) into curves
/// sorted by tokens. CSV expects the header `run_id,delta,split,tokens,loss`;
/// JSONL expects one object per line with the same keys. Token counts accept
/// SI suffixes ("40B"); delta accepts "2%" or "0.02". Malformed rows become
/// warnings with line numbers. Throws FormatError on an unreadable header
/// and DuplicatePointError when one (run, split, tokens) carries two
/// different losses.
ParsedCurves parse_loss_log(const std::string& bytes, LogFormat format);

/// Intersection-only gap: for each token value present in both curves,
/// emits test loss minus train loss. Negative raw gaps are preserved.
/// Throws NoOverlapError when the curves share no abscissae.
GapSeries derive_gap(const LossCurve& train, const LossCurve& test);

/// Assembles parsed curves into a RunDataset, deriving gap series where
/// possible. Merge order is deterministic by run_id.
RunDataset assemble_dataset(const ParsedCurves& parsed);

/// Reads an entire log file and assembles it; format inferred from the
/// extension unless forced.
RunDataset load_dataset(const std::string& path,
                        std::vector<ParseWarning>* warnings = nullptr);

/// Parses finetune outcomes from CSV with header
/// `run_id,delta,tokens,pt_loss,post_ft_loss`.
std::vector<FinetuneOutcome> parse_finetune_outcomes(
    const std::string& bytes, std::vector<ParseWarning>* warnings = nullptr);

/// Per-outcome improvement pairs (tokens, pt_loss - post_ft_loss).
/// Throws InvariantViolation when any improvement is negative.
std::vector<std::pair<TokenCount, double>> compute_delta_test_points(
    const std::vector<FinetuneOutcome>& outcomes);

/// Serializes curves back to the canonical CSV schema (order-normalized:
/// runs by id, splits train/test/general, points by tokens).
std::string curves_to_csv(const std::vector<LossCurve>& curves,
                          const std::map<std::string, MixtureFraction>& run_deltas);

}  // namespace sptlaw
