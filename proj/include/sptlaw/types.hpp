#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sptlaw/errors.hpp"

namespace sptlaw {

/// A count of tokens. Stored exactly as an integer; rendered with SI
/// suffixes (K/M/B/T) at the interface boundary.
struct TokenCount {
  std::uint64_t value = 0;

  constexpr TokenCount() = default;
  constexpr explicit TokenCount(std::uint64_t v) : value(v) {}

  constexpr auto operator<=>(const TokenCount&) const = default;
};

/// The fraction delta of pretraining tokens drawn from the domain corpus.
///
/// Stored both as a double and as an exact rational num/den so that epoch
/// accounting and schedule interleaving can run in integer arithmetic.
/// User-facing inputs accept "2%" or "0.02"; both normalize to 1/50.
class MixtureFraction {
 public:
  MixtureFraction() : num_(0), den_(1), value_(0.0) {}

  // From a raw double; the exact binary expansion becomes the rational.
  explicit MixtureFraction(double v);

  // From an explicit rational (reduced internally).
  static MixtureFraction from_ratio(std::uint64_t num, std::uint64_t den);

  // Accepts "2%", "0.02", "1e-3". Percent is divided by 100 exactly.
  static MixtureFraction parse(const std::string& text);

  double value() const { return value_; }
  std::uint64_t num() const { return num_; }
  std::uint64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }

  bool operator==(const MixtureFraction& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator<(const MixtureFraction& o) const { return value_ < o.value_; }

 private:
  MixtureFraction(std::uint64_t num, std::uint64_t den, double value)
      : num_(num), den_(den), value_(value) {}

  std::uint64_t num_;
  std::uint64_t den_;
  double value_;
};

enum class Split { DomainTrain, DomainTest, General };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct CurvePoint {
  TokenCount tokens;
  double loss = 0.0;
};

/// A measured (tokens, loss) series for one run and one evaluation split.
/// Points are strictly increasing in tokens and every loss is positive.
struct LossCurve {
  std::string run_id;
  Split split = Split::DomainTrain;
  std::vector<CurvePoint> points;

  void validate() const;
};

struct GapPoint {
  TokenCount tokens;
  double gap = 0.0;  // test minus train; may be negative in raw data
};

/// Pointwise train-test gap for one run, defined only at token values
/// present in both the DomainTrain and DomainTest curves.
struct GapSeries {
  std::string run_id;
  std::vector<GapPoint> points;
};

/// Static description of one pretraining run.
struct RunConfig {
  std::string run_id;
  MixtureFraction delta;
  // |D_dom|; absent when the source log does not record the corpus size.
  std::optional<TokenCount> domain_dataset_tokens;
  TokenCount pretrain_budget_tokens;          // T
  std::uint64_t model_params = 0;             // N; 0 when unknown
  std::optional<TokenCount> scpt_start_tokens;  // absent => plain SPT

  // Throws InvalidConfig when fields contradict each other.
  void validate() const;
};

struct TokenRange {
  TokenCount min;
  TokenCount max;

  bool contains(TokenCount t) const { return min <= t && t <= max; }
};

/// Fitted coefficients of the overfitting law:
///
///   train(T, d) = a_train * (T/u)^b_train(d) + C_train(d)
///   gap(T, d)   = A_gap(d) * (T/u)^b_gap(d)
///   test        = train + gap
///   b_x(d)      = d * b_x_s + (1 - d) * b_x_g
///   A_gap(d)    = alpha1 * d^alpha2 * exp(alpha3 * d)
///   C_train(d)  = kappa0 - kappa1 * ln(d + kappa2) - kappa3 * d
///
/// token_unit is the scale u applied to T before exponentiation.
struct OverfitLawParams {
  double a_train = 1.0;
  double b_train_g = -0.1;
  double b_train_s = -0.5;
  double b_gap_g = -0.05;
  double b_gap_s = 1.0;
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  double alpha3 = 0.0;
  double kappa0 = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 1.0;
  double kappa3 = 0.0;
  TokenCount token_unit{1'000'000'000};

  // Token / delta spans the parameters were fitted over. Consumers use
  // these to flag extrapolated predictions; absent for hand-built params.
  std::optional<TokenRange> fitted_tokens;
  std::optional<std::pair<double, double>> fitted_deltas;

  // Throws InvariantViolation when a sign constraint is broken.
  void validate() const;

  bool extrapolates(TokenCount t) const {
    return fitted_tokens.has_value() && !fitted_tokens->contains(t);
  }
};

/// Post-finetuning improvement law for one delta:
///   delta_test(T) = a * (T/u)^b + c,  a >= 0, b <= 0, c >= 0.
struct DeltaTestLawParams {
  MixtureFraction delta;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  TokenCount token_unit{1'000'000'000};
  std::optional<TokenRange> fitted_tokens;

  void validate() const;

  bool extrapolates(TokenCount t) const {
    return fitted_tokens.has_value() && !fitted_tokens->contains(t);
  }
};

/// Diagnostics from one fitting call.
struct FitReport {
  double residual_mse = 0.0;
  // Keyed by (delta, split): DomainTrain rows score the train-curve fit,
  // DomainTest rows score the summed train+gap prediction.
  std::map<std::pair<double, Split>, double> per_curve_r2;
  std::uint64_t iterations = 0;
  bool converged = false;
  int restarts_used = 0;
  std::uint64_t seed = 0;
};

}  // namespace sptlaw
