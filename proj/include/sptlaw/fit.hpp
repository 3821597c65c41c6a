#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sptlaw/ingest.hpp"
#include "sptlaw/types.hpp"

namespace sptlaw {

enum class LossSpace { Linear, Log };

/// Joint optimizes the twelve shared law parameters directly from
/// multi-start; Staged runs per-delta power fits first, fits the
/// coefficient shapes to the per-delta values, then polishes jointly.
enum class FitStrategy { Staged, Joint };

struct FitOptions {
  std::uint64_t max_iterations = 20000;
  int restarts = 32;
  std::uint64_t seed = 0;
  double convergence_tol = 1e-10;  // relative MSE improvement threshold
  LossSpace loss_space = LossSpace::Log;
  FitStrategy strategy = FitStrategy::Staged;
  // Equal point weighting by default; true averages within each curve
  // first so short curves count as much as long ones.
  bool weight_per_curve = false;
  TokenCount token_unit{1'000'000'000};

  void validate() const;
};

/// Sign constraints are enforced by smooth reparameterization of the search
/// space (positives through an exponential map, sign-pinned exponents
/// through a negated one), never by clipping.

enum class PowerLawShape {
  DecayToFloor,  // a >= 0, b <= 0, c >= 0
  Growth,        // a >= 0, b >= 0, c = 0
};

struct PowerLawFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  FitReport report;
};

/// Fits value = a * (tokens/token_unit)^b + c by minimizing MSE in the
/// configured loss space. Throws InsufficientData below 4 points and
/// DomainError on nonpositive token abscissae.
PowerLawFit fit_power_law(const std::vector<std::pair<TokenCount, double>>& points,
                          PowerLawShape shape, const FitOptions& options = {});

struct OverfitFit {
  OverfitLawParams params;
  FitReport report;
};

/// Fits the full overfitting law over the selected mixture fractions by
/// pooling train-curve and gap-curve residuals. Requires DomainTrain and
/// DomainTest curves for at least 3 distinct deltas (two of them nonzero).
/// An empty `deltas` selects every delta in the dataset. Gap residuals at
/// delta = 0 are skipped (the model is structurally zero there); negative
/// raw gap points are clamped to 1e-6 in log space and carry half weight.
OverfitFit fit_overfitting_law(const RunDataset& dataset,
                               const std::vector<MixtureFraction>& deltas,
                               const FitOptions& options = {});

struct DeltaTestFit {
  DeltaTestLawParams params;
  FitReport report;
};

/// DecayToFloor power fit of finetuning improvements against pretraining
/// tokens. Throws InvariantViolation on negative improvements.
DeltaTestFit fit_delta_test_law(
    const std::vector<std::pair<TokenCount, double>>& points,
    MixtureFraction delta, const FitOptions& options = {});

struct SyntheticSpec {
  OverfitLawParams truth;
  std::vector<MixtureFraction> deltas;
  std::vector<TokenCount> token_grid;  // strictly increasing, positive
  double noise_sigma = 0.0;            // multiplicative log-normal
  std::uint64_t seed = 0;

  void validate() const;
};

/// Emits DomainTrain/DomainTest curves from the closed-form law, each point
/// scaled by exp(eps) with eps ~ Normal(0, noise_sigma^2). Deterministic
/// under seed (own Box-Muller over mt19937_64; no draws when sigma is 0).
RunDataset generate_synthetic(const SyntheticSpec& spec);

/// The pooled weighted residual MSE the fitter reports, recomputed for an
/// arbitrary parameter set over the same point selection.
double pooled_residual_mse(const RunDataset& dataset,
                           const std::vector<MixtureFraction>& deltas,
                           const OverfitLawParams& params, LossSpace space,
                           bool weight_per_curve = false);

}  // namespace sptlaw
