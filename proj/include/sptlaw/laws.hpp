#pragma once

#include "sptlaw/types.hpp"

namespace sptlaw {

enum class ExponentKind { Train, Gap };

/// b_x(delta) = delta * b_x_s + (1 - delta) * b_x_g.
double eval_exponent(const OverfitLawParams& p, MixtureFraction delta,
                     ExponentKind which);

/// A_gap(delta) = alpha1 * delta^alpha2 * exp(alpha3 * delta). Exactly zero
/// at delta = 0 (alpha2 > 0 forces it).
double eval_a_gap(const OverfitLawParams& p, MixtureFraction delta);

/// C_train(delta) = kappa0 - kappa1 * ln(delta + kappa2) - kappa3 * delta.
/// Throws DomainError when delta + kappa2 <= 0.
double eval_c_train(const OverfitLawParams& p, MixtureFraction delta);

/// a_train * (T/u)^b_train(delta) + C_train(delta). Throws DomainError at
/// T = 0 (the negative exponent is singular there).
double eval_train_loss(const OverfitLawParams& p, TokenCount t,
                       MixtureFraction delta);

/// A_gap(delta) * (T/u)^b_gap(delta); zero whenever delta = 0.
double eval_gap(const OverfitLawParams& p, TokenCount t, MixtureFraction delta);

/// Exactly eval_train_loss + eval_gap.
double eval_test_loss(const OverfitLawParams& p, TokenCount t,
                      MixtureFraction delta);

struct DeltaTestValue {
  double value = 0.0;
  // Extrapolation drove the raw power law below zero; the value was
  // clamped to 0 and the caller must surface this.
  bool clamped = false;
};

/// a * (T/u)^b + c. The fitted sign constraints keep this nonnegative;
/// only hand-built parameter sets can go below zero, and then the result
/// is clamped with the flag set.
DeltaTestValue eval_delta_test(const DeltaTestLawParams& p, TokenCount t);

}  // namespace sptlaw
