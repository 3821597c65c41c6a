#include "sptlaw/laws.hpp"

#include <cmath>

namespace sptlaw {

namespace {

double scaled_tokens(const OverfitLawParams& p, TokenCount t) {
  if (t.value == 0) {
    throw DomainError("token count must be positive for law evaluation");
  }
  return static_cast<double>(t.value) / static_cast<double>(p.token_unit.value);
}

}  // namespace

double eval_exponent(const OverfitLawParams& p, MixtureFraction delta,
                     ExponentKind which) {
  const double d = delta.value();
  const double bs = which == ExponentKind::Train ? p.b_train_s : p.b_gap_s;
  const double bg = which == ExponentKind::Train ? p.b_train_g : p.b_gap_g;
  return d * bs + (1.0 - d) * bg;
}

double eval_a_gap(const OverfitLawParams& p, MixtureFraction delta) {
  const double d = delta.value();
  if (d == 0.0) return 0.0;
  return p.alpha1 * std::pow(d, p.alpha2) * std::exp(p.alpha3 * d);
}

double eval_c_train(const OverfitLawParams& p, MixtureFraction delta) {
  const double d = delta.value();
  const double arg = d + p.kappa2;
  if (!(arg > 0.0)) {
    throw DomainError("delta + kappa2 must be positive in C_train");
  }
  return p.kappa0 - p.kappa1 * std::log(arg) - p.kappa3 * d;
}

double eval_train_loss(const OverfitLawParams& p, TokenCount t,
                       MixtureFraction delta) {
  const double x = scaled_tokens(p, t);
  const double b = eval_exponent(p, delta, ExponentKind::Train);
  return p.a_train * std::pow(x, b) + eval_c_train(p, delta);
}

double eval_gap(const OverfitLawParams& p, TokenCount t, MixtureFraction delta) {
  const double x = scaled_tokens(p, t);
  if (delta.is_zero()) return 0.0;
  const double b = eval_exponent(p, delta, ExponentKind::Gap);
  return eval_a_gap(p, delta) * std::pow(x, b);
}

double eval_test_loss(const OverfitLawParams& p, TokenCount t,
                      MixtureFraction delta) {
  return eval_train_loss(p, t, delta) + eval_gap(p, t, delta);
}

DeltaTestValue eval_delta_test(const DeltaTestLawParams& p, TokenCount t) {
  if (t.value == 0) {
    throw DomainError("token count must be positive for delta-test evaluation");
  }
  const double x =
      static_cast<double>(t.value) / static_cast<double>(p.token_unit.value);
  const double raw = p.a * std::pow(x, p.b) + p.c;
  if (raw < 0.0) return {0.0, true};
  return {raw, false};
}

}  // namespace sptlaw
