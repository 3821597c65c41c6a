#include "sptlaw/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sptlaw {

namespace {

TokenCount tokens_from_double(double t) {
  const double capped =
      std::min(t, static_cast<double>(std::numeric_limits<std::uint64_t>::max() / 2));
  return TokenCount{static_cast<std::uint64_t>(std::llround(capped))};
}

double post_ft_value(const PostFtLaw& l, double t_tokens) {
  const TokenCount t = tokens_from_double(t_tokens);
  const double test = eval_test_loss(l.law, t, l.delta_law.delta);
  return test - eval_delta_test(l.delta_law, t).value;
}

}  // namespace

std::vector<ForecastPoint> predict_curve(const OverfitLawParams& params,
                                         MixtureFraction delta,
                                         const std::vector<TokenCount>& grid) {
  std::vector<ForecastPoint> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].value == 0) throw DomainError("forecast grid must be positive");
    if (i > 0 && !(grid[i - 1] < grid[i])) {
      throw DomainError("forecast grid must be strictly increasing");
    }
    ForecastPoint p;
    p.delta = delta.value();
    p.tokens = grid[i];
    p.predicted_pt_test_loss = eval_test_loss(params, grid[i], delta);
    p.extrapolated = params.extrapolates(grid[i]);
    out.push_back(p);
  }
  return out;
}

std::optional<TokenCount> overfit_onset(const OverfitLawParams& params,
                                        MixtureFraction delta) {
  const double a_gap = eval_a_gap(params, delta);
  const double b_gap = eval_exponent(params, delta, ExponentKind::Gap);
  if (!(a_gap > 0.0) || !(b_gap > 0.0)) return std::nullopt;
  const double b_train = eval_exponent(params, delta, ExponentKind::Train);
  const double ratio = (-params.a_train * b_train) / (a_gap * b_gap);
  const double t_star_units = std::pow(ratio, 1.0 / (b_gap - b_train));
  const double t_star =
      t_star_units * static_cast<double>(params.token_unit.value);
  if (!std::isfinite(t_star) || t_star < 1.0) return std::nullopt;
  return tokens_from_double(t_star);
}

PostFtPrediction predict_post_ft(const OverfitLawParams& params,
                                 const DeltaTestLawParams& dt, TokenCount t) {
  const double test = eval_test_loss(params, t, dt.delta);
  const DeltaTestValue improvement = eval_delta_test(dt, t);
  PostFtPrediction out;
  out.loss = test - improvement.value;
  out.extrapolated = params.extrapolates(t) || dt.extrapolates(t);
  out.clamped = improvement.clamped;
  return out;
}

CrossoverResult crossover(const PostFtLaw& a, const PostFtLaw& b,
                          TokenRange search_range) {
  if (search_range.min.value == 0 || !(search_range.min < search_range.max)) {
    throw DomainError("crossover range must be positive and ordered");
  }
  const double lo = static_cast<double>(search_range.min.value);
  const double hi = static_cast<double>(search_range.max.value);

  constexpr int kScan = 2048;
  const double lratio = std::log(hi / lo);

  CrossoverResult result;
  bool any_pos = false;
  bool any_neg = false;
  double prev_t = lo;
  double prev_f = post_ft_value(a, lo) - post_ft_value(b, lo);
  any_pos |= prev_f > 0;
  any_neg |= prev_f < 0;

  double bracket_lo = 0, bracket_hi = 0;
  bool found = false;
  for (int k = 1; k <= kScan; ++k) {
    const double t = lo * std::exp(lratio * k / kScan);
    const double f = post_ft_value(a, t) - post_ft_value(b, t);
    any_pos |= f > 0;
    any_neg |= f < 0;
    if (!found && prev_f >= 0 && f < 0) {
      // The at-or-above to strictly-below transition we bisect.
      bracket_lo = prev_t;
      bracket_hi = t;
      found = true;
    }
    prev_t = t;
    prev_f = f;
  }

  if (!found) {
    // Equal curves stay Dominance::None: strictness is required.
    if (any_neg && !any_pos) result.dominance = Dominance::FirstBelowEverywhere;
    if (any_pos && !any_neg) result.dominance = Dominance::SecondBelowEverywhere;
    return result;
  }

  double blo = bracket_lo, bhi = bracket_hi;
  while ((bhi - blo) > 1e-6 * 0.5 * (bhi + blo)) {
    const double mid = 0.5 * (blo + bhi);
    const double f = post_ft_value(a, mid) - post_ft_value(b, mid);
    if (f < 0) {
      bhi = mid;
    } else {
      blo = mid;
    }
  }
  result.tokens = tokens_from_double(0.5 * (blo + bhi));
  return result;
}

MixturePlan optimal_delta(const OverfitLawParams& params,
                          const std::map<double, DeltaTestLawParams>& dt_map,
                          TokenCount budget,
                          const std::vector<MixtureFraction>& candidates) {
  if (candidates.empty()) {
    throw DomainError("optimal_delta requires at least one candidate");
  }
  std::vector<MixtureFraction> sorted = candidates;
  std::sort(sorted.begin(), sorted.end(),
            [](const MixtureFraction& a, const MixtureFraction& b) {
              return a.value() < b.value();
            });

  MixturePlan plan;
  plan.budget_tokens = budget;
  std::size_t best = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const MixtureFraction& d = sorted[i];
    CandidateEval eval;
    eval.delta = d.value();
    auto it = dt_map.find(d.value());
    if (it != dt_map.end()) {
      const PostFtPrediction p = predict_post_ft(params, it->second, budget);
      eval.predicted_loss = p.loss;
      eval.used_post_ft = true;
      eval.extrapolated = p.extrapolated;
    } else {
      eval.predicted_loss = eval_test_loss(params, budget, d);
      eval.used_post_ft = false;
      eval.extrapolated = params.extrapolates(budget);
    }
    eval.onset_tokens = overfit_onset(params, d);
    plan.candidates.push_back(eval);
    // Strict comparison: exact ties keep the earlier (smaller) delta.
    if (eval.predicted_loss < plan.candidates[best].predicted_loss) {
      best = i;
    }
  }
  plan.chosen_delta = sorted[best];
  plan.predicted_loss = plan.candidates[best].predicted_loss;
  return plan;
}

double relative_gain(double loss_npt, double loss_spt) {
  if (!(loss_npt > 0)) {
    throw DomainError("relative gain needs a positive baseline loss");
  }
  return 100.0 * (loss_npt - loss_spt) / loss_npt;
}

double compute_multiplier(
    const std::vector<std::pair<TokenCount, double>>& npt_curve,
    const std::vector<std::pair<TokenCount, double>>& spt_curve) {
  auto check = [](const std::vector<std::pair<TokenCount, double>>& c,
                  const char* name) {
    if (c.empty()) throw InvariantViolation(std::string(name) + " curve is empty");
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i].first.value == 0) {
        throw InvariantViolation(std::string(name) + " curve has zero tokens");
      }
      if (i > 0 && !(c[i - 1].first < c[i].first)) {
        throw InvariantViolation(std::string(name) +
                                 " curve tokens must be increasing");
      }
    }
  };
  check(npt_curve, "npt");
  check(spt_curve, "spt");

  double target = npt_curve.front().second;
  double t_npt = static_cast<double>(npt_curve.front().first.value);
  for (const auto& [t, loss] : npt_curve) {
    if (loss < target) {
      target = loss;
      t_npt = static_cast<double>(t.value);
    }
  }

  // Smallest token count where the log-token linear interpolant of the
  // second curve reaches the target.
  if (spt_curve.front().second <= target) {
    return t_npt / static_cast<double>(spt_curve.front().first.value);
  }
  for (std::size_t i = 1; i < spt_curve.size(); ++i) {
    const double l0 = spt_curve[i - 1].second;
    const double l1 = spt_curve[i].second;
    if (l1 <= target) {
      const double u0 = std::log(static_cast<double>(spt_curve[i - 1].first.value));
      const double u1 = std::log(static_cast<double>(spt_curve[i].first.value));
      const double u = u0 + (target - l0) * (u1 - u0) / (l1 - l0);
      return t_npt / std::exp(u);
    }
  }
  throw NotReached("second curve never attains the baseline best loss");
}

double gap_closure(double l_small_npt, double l_small_spt, double l_large_npt) {
  if (!(l_small_npt > l_large_npt)) {
    throw DegenerateGap("no genuine small-vs-large gap to close");
  }
  return 100.0 * (l_small_npt - l_small_spt) / (l_small_npt - l_large_npt);
}

}  // namespace sptlaw
