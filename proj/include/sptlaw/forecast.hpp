#pragma once

#include <map>
#include <optional>
#include <vector>

#include "sptlaw/laws.hpp"
#include "sptlaw/types.hpp"

namespace sptlaw {

struct ForecastPoint {
  double delta = 0.0;
  TokenCount tokens;
  double predicted_pt_test_loss = 0.0;
  std::optional<double> predicted_delta_test;
  std::optional<double> predicted_post_ft_loss;
  bool extrapolated = false;        // outside the law's fitted token range
  bool delta_test_clamped = false;  // improvement clamped at zero
};

/// Pointwise test-loss predictions over a strictly increasing positive grid.
/// Extrapolation beyond the fitted range is permitted and flagged.
std::vector<ForecastPoint> predict_curve(const OverfitLawParams& params,
                                         MixtureFraction delta,
                                         const std::vector<TokenCount>& grid);

/// The unique interior minimizer of the test loss in T,
///   T* = u * (-a_train b_train / (A_gap b_gap))^(1/(b_gap - b_train)),
/// which exists iff A_gap(delta) > 0 and b_gap(delta) > 0. nullopt means
/// the modeled test loss decreases forever.
std::optional<TokenCount> overfit_onset(const OverfitLawParams& params,
                                        MixtureFraction delta);

struct PostFtPrediction {
  double loss = 0.0;
  bool extrapolated = false;  // T outside either law's fitted range
  bool clamped = false;       // delta-test term clamped at zero
};

/// eval_test_loss(T, delta) minus eval_delta_test(T). The delta carried by
/// the improvement law selects the mixture.
PostFtPrediction predict_post_ft(const OverfitLawParams& params,
                                 const DeltaTestLawParams& dt, TokenCount t);

/// A mixture's post-finetuning predictor: the shared pretraining law plus
/// that mixture's improvement law.
struct PostFtLaw {
  OverfitLawParams law;
  DeltaTestLawParams delta_law;
};

enum class Dominance {
  None,
  FirstBelowEverywhere,   // A strictly below B across the whole range
  SecondBelowEverywhere,  // B strictly below A across the whole range
};

struct CrossoverResult {
  // Smallest T in range where A's post-FT prediction drops strictly below
  // B's, bisected to 1e-6 relative. nullopt when no sign change occurs.
  std::optional<TokenCount> tokens;
  Dominance dominance = Dominance::None;
};

CrossoverResult crossover(const PostFtLaw& a, const PostFtLaw& b,
                          TokenRange search_range);

struct CandidateEval {
  double delta = 0.0;
  double predicted_loss = 0.0;
  bool used_post_ft = false;  // false: degraded to the PT-test prediction
  bool extrapolated = false;
  std::optional<TokenCount> onset_tokens;
};

struct MixturePlan {
  TokenCount budget_tokens;
  std::vector<CandidateEval> candidates;  // ascending by delta
  MixtureFraction chosen_delta;
  double predicted_loss = 0.0;
};

/// Argmin of the post-FT prediction at the budget over the candidate
/// mixtures; exact ties break toward the smaller delta. Candidates missing
/// from dt_map fall back to the PT-test prediction, flagged.
MixturePlan optimal_delta(const OverfitLawParams& params,
                          const std::map<double, DeltaTestLawParams>& dt_map,
                          TokenCount budget,
                          const std::vector<MixtureFraction>& candidates);

/// 100 * (loss_npt - loss_spt) / loss_npt.
double relative_gain(double loss_npt, double loss_spt);

/// Factor by which the second curve reaches the first curve's best loss
/// earlier, interpolating linearly in (log tokens, loss). Throws NotReached
/// when the second curve never attains the target.
double compute_multiplier(
    const std::vector<std::pair<TokenCount, double>>& npt_curve,
    const std::vector<std::pair<TokenCount, double>>& spt_curve);

/// Percentage of the small-vs-large model gap closed by the small SPT
/// model; above 100 means the small model overtakes the large one.
double gap_closure(double l_small_npt, double l_small_spt, double l_large_npt);

}  // namespace sptlaw
