#include "sptlaw/fit.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "optim.hpp"
#include "sptlaw/laws.hpp"

namespace sptlaw {

namespace {

using detail::halton_point;
using detail::nelder_mead;
using detail::NelderMeadOptions;
using detail::OptimResult;

constexpr double kPenalty = 1e30;
constexpr double kGapLogClamp = 1e-6;
constexpr double kNegativeGapWeight = 0.5;

struct WPoint {
  double x;      // tokens / token_unit
  double y;      // raw value
  double y_log;  // log of (clamped) value, for log-space residuals
  double w;
};

struct CurveData {
  double delta = 0.0;
  std::vector<WPoint> pts;
};

struct FitData {
  std::vector<CurveData> train;
  std::vector<CurveData> gap;
  // Measured test points, kept for R^2 of the summed prediction.
  std::vector<CurveData> test;
  TokenCount min_tokens{std::numeric_limits<std::uint64_t>::max()};
  TokenCount max_tokens{0};
  double min_delta = std::numeric_limits<double>::infinity();
  double max_delta = 0.0;
};

double shortest_double(double v, char* buf, std::size_t n) {
  auto [p, ec] = std::to_chars(buf, buf + n, v);
  (void)ec;
  *p = '\0';
  return v;
}

std::string format_delta(double v) {
  char buf[32];
  shortest_double(v, buf, sizeof(buf));
  return buf;
}

// ---------------------------------------------------------------------------
// Small dense weighted least squares (normal equations with ridge).

std::vector<double> solve_wls(const std::vector<std::vector<double>>& rows,
                              const std::vector<double>& ys,
                              const std::vector<double>& ws,
                              double ridge = 1e-12) {
  const std::size_t n = rows.empty() ? 0 : rows.front().size();
  std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
  std::vector<double> atb(n, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double w = ws.empty() ? 1.0 : ws[r];
    for (std::size_t i = 0; i < n; ++i) {
      atb[i] += w * rows[r][i] * ys[r];
      for (std::size_t j = 0; j < n; ++j) {
        ata[i][j] += w * rows[r][i] * rows[r][j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) ata[i][i] += ridge;

  // Gaussian elimination with partial pivoting.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
    }
    std::swap(ata[col], ata[piv]);
    std::swap(atb[col], atb[piv]);
    const double d = ata[col][col];
    if (d == 0.0) continue;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = ata[r][col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) ata[r][c] -= f * ata[col][c];
      atb[r] -= f * atb[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = atb[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= ata[i][j] * x[j];
    x[i] = ata[i][i] != 0.0 ? s / ata[i][i] : 0.0;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Parameter vector <-> OverfitLawParams, via the smooth sign-preserving maps.

OverfitLawParams decode_params(const std::vector<double>& p, TokenCount unit) {
  OverfitLawParams q;
  q.a_train = std::exp(p[0]);
  q.b_train_g = -std::exp(p[1]);
  q.b_train_s = q.b_train_g - std::exp(p[2]);
  q.b_gap_g = -std::exp(p[3]);
  q.b_gap_s = std::exp(p[4]);
  q.alpha1 = std::exp(p[5]);
  q.alpha2 = std::exp(p[6]);
  q.alpha3 = p[7];
  q.kappa0 = p[8];
  q.kappa1 = p[9];
  q.kappa2 = std::exp(p[10]);
  q.kappa3 = p[11];
  q.token_unit = unit;
  return q;
}

std::vector<double> encode_params(const OverfitLawParams& q) {
  auto safe_log = [](double v) { return std::log(std::max(v, 1e-15)); };
  return {safe_log(q.a_train),
          safe_log(-q.b_train_g),
          safe_log(q.b_train_g - q.b_train_s),
          safe_log(-q.b_gap_g),
          safe_log(q.b_gap_s),
          safe_log(q.alpha1),
          safe_log(q.alpha2),
          q.alpha3,
          q.kappa0,
          q.kappa1,
          safe_log(q.kappa2),
          q.kappa3};
}

double law_objective(const OverfitLawParams& q, const FitData& data,
                     LossSpace space) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& curve : data.train) {
    const double d = curve.delta;
    const double b = d * q.b_train_s + (1.0 - d) * q.b_train_g;
    const double c = q.kappa0 - q.kappa1 * std::log(d + q.kappa2) - q.kappa3 * d;
    for (const auto& pt : curve.pts) {
      const double model = q.a_train * std::pow(pt.x, b) + c;
      double r;
      if (space == LossSpace::Log) {
        if (!(model > 0.0)) return kPenalty;
        r = std::log(model) - pt.y_log;
      } else {
        r = model - pt.y;
      }
      num += pt.w * r * r;
      den += pt.w;
    }
  }
  for (const auto& curve : data.gap) {
    const double d = curve.delta;
    const double b = d * q.b_gap_s + (1.0 - d) * q.b_gap_g;
    const double amp =
        q.alpha1 * std::pow(d, q.alpha2) * std::exp(q.alpha3 * d);
    for (const auto& pt : curve.pts) {
      const double model = amp * std::pow(pt.x, b);
      double r;
      if (space == LossSpace::Log) {
        if (!(model > 0.0)) return kPenalty;
        r = std::log(model) - pt.y_log;
      } else {
        r = model - pt.y;
      }
      num += pt.w * r * r;
      den += pt.w;
    }
  }
  if (den == 0.0) return kPenalty;
  const double mse = num / den;
  return std::isfinite(mse) ? mse : kPenalty;
}

FitData assemble_fit_data(const RunDataset& ds,
                          const std::vector<MixtureFraction>& deltas,
                          TokenCount unit, bool weight_per_curve) {
  std::set<double> selected;
  for (const auto& d : deltas) selected.insert(d.value());

  FitData data;
  const double u = static_cast<double>(unit.value);
  std::set<double> deltas_with_both;
  std::set<double> nonzero_with_gap;

  for (const auto& [run_id, cfg] : ds.runs) {
    const double d = cfg.delta.value();
    if (!selected.empty() && selected.count(d) == 0) continue;
    const LossCurve* train = ds.find_curve(run_id, Split::DomainTrain);
    const LossCurve* test = ds.find_curve(run_id, Split::DomainTest);
    if (train == nullptr || test == nullptr) continue;
    deltas_with_both.insert(d);

    if (train->points.size() < 4) {
      throw InsufficientData("train curve for run " + run_id +
                             " has fewer than 4 points");
    }

    CurveData tc;
    tc.delta = d;
    for (const auto& pt : train->points) {
      if (pt.tokens.value == 0) {
        throw DomainError("token abscissa must be positive in run " + run_id);
      }
      const double x = static_cast<double>(pt.tokens.value) / u;
      tc.pts.push_back({x, pt.loss, std::log(pt.loss), 1.0});
      data.min_tokens = std::min(data.min_tokens, pt.tokens);
      data.max_tokens = std::max(data.max_tokens, pt.tokens);
    }
    data.min_delta = std::min(data.min_delta, d);
    data.max_delta = std::max(data.max_delta, d);

    CurveData sc;
    sc.delta = d;
    for (const auto& pt : test->points) {
      const double x = static_cast<double>(pt.tokens.value) / u;
      sc.pts.push_back({x, pt.loss, std::log(pt.loss), 1.0});
    }
    data.test.push_back(std::move(sc));

    if (d > 0.0) {
      if (const GapSeries* gap = ds.find_gap(run_id)) {
        CurveData gc;
        gc.delta = d;
        for (const auto& gp : gap->points) {
          const double x = static_cast<double>(gp.tokens.value) / u;
          const double w = gp.gap < 0.0 ? kNegativeGapWeight : 1.0;
          gc.pts.push_back(
              {x, gp.gap, std::log(std::max(gp.gap, kGapLogClamp)), w});
        }
        data.gap.push_back(std::move(gc));
        nonzero_with_gap.insert(d);
      }
    }
    data.train.push_back(std::move(tc));
  }

  if (deltas_with_both.size() < 3) {
    throw InsufficientData(
        "need DomainTrain and DomainTest curves for at least 3 distinct "
        "deltas, have " +
        std::to_string(deltas_with_both.size()));
  }
  if (nonzero_with_gap.size() < 2) {
    throw InsufficientData(
        "need gap series (shared train/test abscissae) for at least 2 "
        "nonzero deltas");
  }
  if (weight_per_curve) {
    for (auto* group : {&data.train, &data.gap}) {
      for (auto& curve : *group) {
        const double w = 1.0 / static_cast<double>(curve.pts.size());
        for (auto& pt : curve.pts) pt.w *= w;
      }
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Multi-start driver shared by the law fit and the generic power fit.

struct MultistartOutcome {
  std::vector<double> x;
  double fx = kPenalty;
  std::uint64_t evals = 0;
  bool converged = false;
};

MultistartOutcome run_multistart(const detail::Objective& obj,
                                 const std::vector<std::vector<double>>& starts,
                                 std::uint64_t max_iterations, double ftol) {
  MultistartOutcome out;
  NelderMeadOptions nm;
  nm.max_iterations = max_iterations;
  nm.ftol_rel = ftol;
  nm.initial_step = 0.5;

  int best_idx = -1;
  OptimResult best;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    OptimResult r = nelder_mead(obj, starts[k], nm);
    out.evals += r.evals;
    if (best_idx < 0 || r.fx < best.fx) {
      best = std::move(r);
      best_idx = static_cast<int>(k);
    }
  }

  // Polish pass: compass search, a short simplex rerun, then a fine
  // compass sweep to drain the last digits.
  OptimResult pol =
      detail::coordinate_polish(obj, best.x, best.fx, 0.25, 1e-10, 60000);
  out.evals += pol.evals;
  NelderMeadOptions nm2 = nm;
  nm2.initial_step = 0.02;
  OptimResult r2 = nelder_mead(obj, pol.x, nm2);
  out.evals += r2.evals;
  const OptimResult* fin = r2.fx < pol.fx ? &r2 : &pol;
  OptimResult pol2 =
      detail::coordinate_polish(obj, fin->x, fin->fx, 1e-3, 1e-12, 60000);
  out.evals += pol2.evals;

  if (pol2.fx <= fin->fx) {
    out.x = std::move(pol2.x);
    out.fx = pol2.fx;
  } else {
    out.x = fin->x;
    out.fx = fin->fx;
  }
  out.converged = (best.converged || r2.converged) && out.fx < kPenalty;
  return out;
}

std::vector<std::vector<double>> perturbed_starts(
    const std::vector<double>& center, const std::vector<double>& halfwidth,
    int restarts, std::uint64_t seed) {
  std::vector<std::vector<double>> starts;
  starts.reserve(static_cast<std::size_t>(restarts));
  starts.push_back(center);
  const std::uint64_t offset = 1 + (seed % (1ull << 20));
  for (int k = 1; k < restarts; ++k) {
    auto h = halton_point(center.size(), offset + static_cast<std::uint64_t>(k));
    std::vector<double> p(center.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = center[i] + (2.0 * h[i] - 1.0) * halfwidth[i];
    }
    starts.push_back(std::move(p));
  }
  return starts;
}

double r_squared(const std::vector<double>& residuals,
                 const std::vector<double>& observed) {
  double mean = 0.0;
  for (double y : observed) mean += y;
  mean /= static_cast<double>(observed.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += residuals[i] * residuals[i];
    const double d = observed[i] - mean;
    ss_tot += d * d;
  }
  if (ss_tot < 1e-300) return ss_res < 1e-12 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

// ---------------------------------------------------------------------------
// Staged initialization (per-delta fits, then coefficient shapes).

struct PerDeltaFits {
  std::vector<double> deltas;     // all deltas with train curves
  std::vector<double> a_train;    // per-delta amplitude estimates
  std::vector<double> b_train;    // per-delta train exponents
  std::vector<double> c_train;    // per-delta floors
  std::vector<double> gap_deltas; // nonzero deltas with gap curves
  std::vector<double> b_gap;      // per-delta gap exponents
  std::vector<double> ln_a_gap;   // per-delta log gap amplitudes
};

// Profile fit of y = a x^b + c over a grid of b, linear least squares for
// (a, c) at each candidate, optionally with c pinned to zero.
void profile_power_init(const std::vector<WPoint>& pts, bool with_floor,
                        bool decay, double* a, double* b, double* c) {
  double best_sse = std::numeric_limits<double>::infinity();
  const int kGrid = 181;
  for (int i = 0; i < kGrid; ++i) {
    const double mag =
        std::exp(std::log(1e-3) +
                 (std::log(6.0) - std::log(1e-3)) * i / double(kGrid - 1));
    const double bb = decay ? -mag : mag;
    double s_bb = 0, s_b1 = 0, s_by = 0, s_y = 0, n = 0;
    for (const auto& pt : pts) {
      const double xb = std::pow(pt.x, bb);
      s_bb += xb * xb;
      s_b1 += xb;
      s_by += xb * pt.y;
      s_y += pt.y;
      n += 1.0;
    }
    double aa, cc;
    if (with_floor) {
      const double det = s_bb * n - s_b1 * s_b1;
      if (std::abs(det) < 1e-300) continue;
      aa = (s_by * n - s_b1 * s_y) / det;
      cc = (s_bb * s_y - s_b1 * s_by) / det;
      if (aa < 0) {
        aa = 0;
        cc = s_y / n;
      }
      if (cc < 0) {
        cc = 0;
        aa = s_bb > 0 ? std::max(0.0, s_by / s_bb) : 0.0;
      }
    } else {
      aa = s_bb > 0 ? std::max(0.0, s_by / s_bb) : 0.0;
      cc = 0;
    }
    double sse = 0;
    for (const auto& pt : pts) {
      const double r = aa * std::pow(pt.x, bb) + cc - pt.y;
      sse += r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      *a = aa;
      *b = bb;
      *c = cc;
    }
  }
}

PerDeltaFits per_delta_fits(const FitData& data, const FitOptions& options) {
  PerDeltaFits out;

  for (const auto& curve : data.train) {
    // 3-parameter decay fit per curve; the shared amplitude emerges as the
    // average of the per-delta estimates.
    double a = 1, b = -0.2, c = 0;
    profile_power_init(curve.pts, /*with_floor=*/true, /*decay=*/true, &a, &b,
                       &c);
    // Refine in the configured space with a short 3-dim simplex.
    auto obj = [&](const std::vector<double>& p) {
      const double aa = std::exp(p[0]);
      const double bb = -std::exp(p[1]);
      const double cc = p[2];  // floor sign-free here; shapes happen later
      double sse = 0;
      for (const auto& pt : curve.pts) {
        const double model = aa * std::pow(pt.x, bb) + cc;
        double r;
        if (options.loss_space == LossSpace::Log) {
          if (!(model > 0)) return kPenalty;
          r = std::log(model) - pt.y_log;
        } else {
          r = model - pt.y;
        }
        sse += r * r;
      }
      return sse;
    };
    std::vector<double> p0 = {std::log(std::max(a, 1e-9)),
                              std::log(std::max(-b, 1e-6)), c};
    NelderMeadOptions nm;
    nm.max_iterations = 4000;
    nm.ftol_rel = 1e-12;
    OptimResult r = nelder_mead(obj, p0, nm);
    OptimResult pol = detail::coordinate_polish(obj, r.x, r.fx, 0.05, 1e-12, 8000);
    const auto& best = pol.fx < r.fx ? pol.x : r.x;
    out.deltas.push_back(curve.delta);
    out.a_train.push_back(std::exp(best[0]));
    out.b_train.push_back(-std::exp(best[1]));
    out.c_train.push_back(best[2]);
  }

  for (const auto& curve : data.gap) {
    // Pure power law: weighted linear regression in log-log space.
    std::vector<std::vector<double>> rows;
    std::vector<double> ys, ws;
    for (const auto& pt : curve.pts) {
      rows.push_back({1.0, std::log(pt.x)});
      ys.push_back(pt.y_log);
      ws.push_back(pt.w);
    }
    auto sol = solve_wls(rows, ys, ws);
    out.gap_deltas.push_back(curve.delta);
    out.ln_a_gap.push_back(sol[0]);
    out.b_gap.push_back(sol[1]);
  }
  return out;
}

std::vector<double> staged_init(const FitData& data, const FitOptions& options) {
  const PerDeltaFits pd = per_delta_fits(data, options);

  OverfitLawParams q;
  q.token_unit = options.token_unit;

  // Shared amplitude: geometric mean of the per-delta estimates.
  double ln_a = 0;
  int n_a = 0;
  for (double a : pd.a_train) {
    if (a > 0) {
      ln_a += std::log(a);
      ++n_a;
    }
  }
  q.a_train = n_a > 0 ? std::exp(ln_a / n_a) : 1.0;

  {
    // b_train(d) = (1-d) b_g + d b_s.
    std::vector<std::vector<double>> rows;
    std::vector<double> ys, ws;
    for (std::size_t i = 0; i < pd.deltas.size(); ++i) {
      rows.push_back({1.0 - pd.deltas[i], pd.deltas[i]});
      ys.push_back(pd.b_train[i]);
      ws.push_back(1.0);
    }
    auto sol = solve_wls(rows, ys, ws);
    q.b_train_g = std::min(sol[0], -1e-9);
    q.b_train_s = std::min(sol[1], q.b_train_g - 1e-9);
  }
  {
    std::vector<std::vector<double>> rows;
    std::vector<double> ys, ws;
    for (std::size_t i = 0; i < pd.gap_deltas.size(); ++i) {
      rows.push_back({1.0 - pd.gap_deltas[i], pd.gap_deltas[i]});
      ys.push_back(pd.b_gap[i]);
      ws.push_back(1.0);
    }
    auto sol = solve_wls(rows, ys, ws);
    q.b_gap_g = std::min(sol[0], -1e-9);
    q.b_gap_s = std::max(sol[1], 1e-9);
  }
  {
    // ln A_gap(d) = ln(alpha1) + alpha2 ln(d) + alpha3 d over nonzero deltas.
    std::vector<std::vector<double>> rows;
    std::vector<double> ys, ws;
    for (std::size_t i = 0; i < pd.gap_deltas.size(); ++i) {
      rows.push_back({1.0, std::log(pd.gap_deltas[i]), pd.gap_deltas[i]});
      ys.push_back(pd.ln_a_gap[i]);
      ws.push_back(1.0);
    }
    auto sol = solve_wls(rows, ys, ws, 1e-10);
    q.alpha1 = std::exp(std::clamp(sol[0], -34.0, 34.0));
    q.alpha2 = std::max(sol[1], 1e-6);
    q.alpha3 = sol[2];
  }
  {
    // C(d) = k0 - k1 ln(d + k2) - k3 d: profile k2, linear solve the rest.
    auto kappa_sse = [&](double k2, std::array<double, 3>* coef) {
      std::vector<std::vector<double>> rows;
      std::vector<double> ys, ws;
      for (std::size_t i = 0; i < pd.deltas.size(); ++i) {
        rows.push_back({1.0, -std::log(pd.deltas[i] + k2), -pd.deltas[i]});
        ys.push_back(pd.c_train[i]);
        ws.push_back(1.0);
      }
      auto sol = solve_wls(rows, ys, ws, 1e-10);
      double sse = 0;
      for (std::size_t i = 0; i < pd.deltas.size(); ++i) {
        const double r = sol[0] - sol[1] * std::log(pd.deltas[i] + k2) -
                         sol[2] * pd.deltas[i] - pd.c_train[i];
        sse += r * r;
      }
      if (coef != nullptr) *coef = {sol[0], sol[1], sol[2]};
      return sse;
    };
    double best_lk2 = std::log(0.01);
    double best_sse = std::numeric_limits<double>::infinity();
    const int kGrid = 161;
    for (int i = 0; i < kGrid; ++i) {
      const double lk2 =
          std::log(1e-6) + (std::log(10.0) - std::log(1e-6)) * i / double(kGrid - 1);
      const double sse = kappa_sse(std::exp(lk2), nullptr);
      if (sse < best_sse) {
        best_sse = sse;
        best_lk2 = lk2;
      }
    }
    // Golden-section refinement around the best grid cell.
    const double span = (std::log(10.0) - std::log(1e-6)) / double(kGrid - 1);
    double lo = best_lk2 - span, hi = best_lk2 + span;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = kappa_sse(std::exp(x1), nullptr);
    double f2 = kappa_sse(std::exp(x2), nullptr);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = kappa_sse(std::exp(x1), nullptr);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = kappa_sse(std::exp(x2), nullptr);
      }
    }
    std::array<double, 3> coef{};
    const double k2 = std::exp(0.5 * (lo + hi));
    kappa_sse(k2, &coef);
    q.kappa0 = coef[0];
    q.kappa1 = coef[1];
    q.kappa2 = k2;
    q.kappa3 = coef[2];
  }
  return encode_params(q);
}

std::vector<double> joint_heuristic_center(const FitData& data,
                                           const FitOptions& options) {
  // Coarse magnitudes pulled straight from the data; the multistart box
  // around this point is wide.
  const CurveData* lowest = &data.train.front();
  for (const auto& c : data.train) {
    if (c.delta < lowest->delta) lowest = &c;
  }
  const double y_first = lowest->pts.front().y;
  const double y_last = lowest->pts.back().y;
  const double range = std::max({y_first - y_last, 0.05 * y_first, 1e-3});

  double y_min = std::numeric_limits<double>::infinity();
  for (const auto& c : data.train) {
    for (const auto& pt : c.pts) y_min = std::min(y_min, pt.y);
  }

  double gap_amp = 1e-3;
  double gap_delta = 0.01;
  if (!data.gap.empty()) {
    const CurveData* largest = &data.gap.front();
    for (const auto& c : data.gap) {
      if (c.delta > largest->delta) largest = &c;
    }
    gap_delta = largest->delta;
    double gmax = 0;
    for (const auto& pt : largest->pts) gmax = std::max(gmax, pt.y);
    gap_amp = std::clamp(gmax, 1e-4, 10.0);
  }

  OverfitLawParams q;
  q.token_unit = options.token_unit;
  q.a_train = range;
  q.b_train_g = -0.2;
  q.b_train_s = -0.5;
  q.b_gap_g = -0.03;
  q.b_gap_s = 1.0;
  q.alpha1 = std::clamp(gap_amp / gap_delta, 1e-5, 50.0);
  q.alpha2 = 1.0;
  q.alpha3 = 1.0;
  q.kappa0 = y_min;
  q.kappa1 = 0.1;
  q.kappa2 = 0.02;
  q.kappa3 = 0.5;
  return encode_params(q);
}

FitReport make_report(const FitData& data, const OverfitLawParams& q,
                      const MultistartOutcome& opt, const FitOptions& options) {
  FitReport rep;
  rep.residual_mse = opt.fx;
  rep.iterations = opt.evals;
  rep.converged = opt.converged;
  rep.restarts_used = options.restarts;
  rep.seed = options.seed;

  // Pool residuals per (delta, split) for the R^2 map.
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_train;
  for (const auto& curve : data.train) {
    const double d = curve.delta;
    const double b = d * q.b_train_s + (1.0 - d) * q.b_train_g;
    const double c = q.kappa0 - q.kappa1 * std::log(d + q.kappa2) - q.kappa3 * d;
    auto& acc = by_train[d];
    for (const auto& pt : curve.pts) {
      const double model = q.a_train * std::pow(pt.x, b) + c;
      if (options.loss_space == LossSpace::Log) {
        acc.first.push_back(model > 0 ? std::log(model) - pt.y_log : 1e3);
        acc.second.push_back(pt.y_log);
      } else {
        acc.first.push_back(model - pt.y);
        acc.second.push_back(pt.y);
      }
    }
  }
  for (auto& [d, acc] : by_train) {
    rep.per_curve_r2[{d, Split::DomainTrain}] = r_squared(acc.first, acc.second);
  }

  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_test;
  for (const auto& curve : data.test) {
    const double d = curve.delta;
    const double bt = d * q.b_train_s + (1.0 - d) * q.b_train_g;
    const double c = q.kappa0 - q.kappa1 * std::log(d + q.kappa2) - q.kappa3 * d;
    const double bg = d * q.b_gap_s + (1.0 - d) * q.b_gap_g;
    const double amp =
        d > 0 ? q.alpha1 * std::pow(d, q.alpha2) * std::exp(q.alpha3 * d) : 0.0;
    auto& acc = by_test[d];
    for (const auto& pt : curve.pts) {
      const double model =
          q.a_train * std::pow(pt.x, bt) + c + amp * std::pow(pt.x, bg);
      if (options.loss_space == LossSpace::Log) {
        acc.first.push_back(model > 0 ? std::log(model) - pt.y_log : 1e3);
        acc.second.push_back(pt.y_log);
      } else {
        acc.first.push_back(model - pt.y);
        acc.second.push_back(pt.y);
      }
    }
  }
  for (auto& [d, acc] : by_test) {
    rep.per_curve_r2[{d, Split::DomainTest}] = r_squared(acc.first, acc.second);
  }
  return rep;
}

}  // namespace

void FitOptions::validate() const {
  if (restarts < 1) throw InvariantViolation("restarts must be at least 1");
  if (!(convergence_tol > 0)) throw InvariantViolation("tolerance must be positive");
  if (max_iterations == 0) throw InvariantViolation("max_iterations must be positive");
  if (token_unit.value == 0) throw InvariantViolation("token_unit must be positive");
}

PowerLawFit fit_power_law(const std::vector<std::pair<TokenCount, double>>& points,
                          PowerLawShape shape, const FitOptions& options) {
  options.validate();
  if (points.size() < 4) {
    throw InsufficientData("power-law fit needs at least 4 points, have " +
                           std::to_string(points.size()));
  }
  const double u = static_cast<double>(options.token_unit.value);
  std::vector<WPoint> pts;
  pts.reserve(points.size());
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -vmin;
  for (const auto& [t, v] : points) {
    if (t.value == 0) throw DomainError("token abscissa must be positive");
    const double x = static_cast<double>(t.value) / u;
    pts.push_back({x, v, std::log(std::max(v, kGapLogClamp)), 1.0});
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }

  PowerLawFit fit;
  fit.report.restarts_used = options.restarts;
  fit.report.seed = options.seed;

  if (vmax == vmin) {
    // Constant series: the floor carries everything.
    fit.a = 0.0;
    fit.b = 0.0;
    fit.c = shape == PowerLawShape::Growth ? 0.0 : std::max(0.0, vmin);
    if (shape == PowerLawShape::Growth && vmin != 0.0) {
      fit.a = vmin;  // a * x^0 matches a nonzero constant
    }
    fit.report.converged = true;
    double sse = 0;
    for (const auto& pt : pts) {
      const double model = fit.a + fit.c;
      const double r = options.loss_space == LossSpace::Log
                           ? std::log(std::max(model, kGapLogClamp)) - pt.y_log
                           : model - pt.y;
      sse += r * r;
    }
    fit.report.residual_mse = sse / static_cast<double>(pts.size());
    return fit;
  }

  const bool decay = shape == PowerLawShape::DecayToFloor;
  const bool with_floor = decay;

  auto obj = [&](const std::vector<double>& p) {
    const double a = std::exp(p[0]);
    const double b = decay ? -std::exp(p[1]) : std::exp(p[1]);
    const double c = with_floor ? std::exp(p[2]) : 0.0;
    double num = 0;
    for (const auto& pt : pts) {
      const double model = a * std::pow(pt.x, b) + c;
      double r;
      if (options.loss_space == LossSpace::Log) {
        if (!(model > 0)) return kPenalty;
        r = std::log(model) - pt.y_log;
      } else {
        r = model - pt.y;
      }
      num += r * r;
    }
    const double mse = num / static_cast<double>(pts.size());
    return std::isfinite(mse) ? mse : kPenalty;
  };

  double a0 = 1, b0 = decay ? -0.5 : 0.5, c0 = 0;
  profile_power_init(pts, with_floor, decay, &a0, &b0, &c0);
  if (!decay) {
    // Growth with zero floor is exactly linear in log-log space; prefer
    // that solution when it beats the grid.
    std::vector<std::vector<double>> rows;
    std::vector<double> ys, ws;
    for (const auto& pt : pts) {
      if (pt.y > 0) {
        rows.push_back({1.0, std::log(pt.x)});
        ys.push_back(std::log(pt.y));
        ws.push_back(1.0);
      }
    }
    if (rows.size() >= 2) {
      auto sol = solve_wls(rows, ys, ws);
      const double a_ll = std::exp(sol[0]);
      const double b_ll = sol[1];
      if (b_ll > 0) {
        double sse_ll = 0, sse_grid = 0;
        for (const auto& pt : pts) {
          const double r1 = a_ll * std::pow(pt.x, b_ll) - pt.y;
          const double r2 = a0 * std::pow(pt.x, b0) - pt.y;
          sse_ll += r1 * r1;
          sse_grid += r2 * r2;
        }
        if (sse_ll < sse_grid) {
          a0 = a_ll;
          b0 = b_ll;
        }
      }
    }
  }

  std::vector<double> center = {std::log(std::clamp(a0, 1e-12, 1e12)),
                                std::log(std::clamp(std::abs(b0), 1e-6, 8.0))};
  std::vector<double> halfwidth = {1.5, 1.0};
  if (with_floor) {
    center.push_back(std::log(std::clamp(c0, 1e-12, 1e12)));
    halfwidth.push_back(2.0);
  }

  auto starts = perturbed_starts(center, halfwidth, options.restarts, options.seed);
  auto out = run_multistart(obj, starts, options.max_iterations,
                            options.convergence_tol);

  fit.a = std::exp(out.x[0]);
  fit.b = decay ? -std::exp(out.x[1]) : std::exp(out.x[1]);
  fit.c = with_floor ? std::exp(out.x[2]) : 0.0;
  fit.report.residual_mse = out.fx;
  fit.report.iterations = out.evals;
  fit.report.converged = out.converged;

  std::vector<double> residuals, observed;
  for (const auto& pt : pts) {
    const double model = fit.a * std::pow(pt.x, fit.b) + fit.c;
    if (options.loss_space == LossSpace::Log) {
      residuals.push_back(std::log(std::max(model, 1e-300)) - pt.y_log);
      observed.push_back(pt.y_log);
    } else {
      residuals.push_back(model - pt.y);
      observed.push_back(pt.y);
    }
  }
  fit.report.per_curve_r2[{0.0, Split::DomainTrain}] =
      r_squared(residuals, observed);
  return fit;
}

OverfitFit fit_overfitting_law(const RunDataset& dataset,
                               const std::vector<MixtureFraction>& deltas,
                               const FitOptions& options) {
  options.validate();
  FitData data = assemble_fit_data(dataset, deltas, options.token_unit,
                                   options.weight_per_curve);

  auto obj = [&](const std::vector<double>& p) {
    return law_objective(decode_params(p, options.token_unit), data,
                         options.loss_space);
  };

  std::vector<double> center;
  std::vector<double> halfwidth;
  if (options.strategy == FitStrategy::Staged) {
    center = staged_init(data, options);
    halfwidth.assign(center.size(), 0.5);
  } else {
    center = joint_heuristic_center(data, options);
    halfwidth = {1.5, 1.2, 1.2, 1.5, 1.2, 2.0, 0.8, 2.0, 1.0, 0.5, 2.0, 1.0};
    // kappa0 wanders on an absolute scale tied to the loss floor.
    halfwidth[8] = std::max(1.0, 0.5 * std::abs(center[8]));
  }

  auto starts = perturbed_starts(center, halfwidth, options.restarts, options.seed);
  auto out = run_multistart(obj, starts, options.max_iterations,
                            options.convergence_tol);

  OverfitFit result;
  result.params = decode_params(out.x, options.token_unit);
  result.params.fitted_tokens = TokenRange{data.min_tokens, data.max_tokens};
  result.params.fitted_deltas = {data.min_delta, data.max_delta};
  result.params.validate();  // structural by construction
  result.report = make_report(data, result.params, out, options);
  return result;
}

DeltaTestFit fit_delta_test_law(
    const std::vector<std::pair<TokenCount, double>>& points,
    MixtureFraction delta, const FitOptions& options) {
  if (points.size() < 4) {
    throw InsufficientData("delta-test fit needs at least 4 points, have " +
                           std::to_string(points.size()));
  }
  for (const auto& [t, v] : points) {
    if (v < 0) {
      throw InvariantViolation("delta-test improvements must be nonnegative");
    }
  }
  PowerLawFit pl = fit_power_law(points, PowerLawShape::DecayToFloor, options);

  DeltaTestFit fit;
  fit.params.delta = delta;
  fit.params.a = pl.a;
  fit.params.b = pl.b;
  fit.params.c = pl.c;
  fit.params.token_unit = options.token_unit;
  TokenCount lo = points.front().first, hi = points.front().first;
  for (const auto& [t, v] : points) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  fit.params.fitted_tokens = TokenRange{lo, hi};
  fit.params.validate();
  fit.report = pl.report;
  fit.report.per_curve_r2.clear();
  fit.report.per_curve_r2[{delta.value(), Split::DomainTest}] =
      pl.report.per_curve_r2.count({0.0, Split::DomainTrain}) != 0
          ? pl.report.per_curve_r2.at({0.0, Split::DomainTrain})
          : 0.0;
  return fit;
}

void SyntheticSpec::validate() const {
  truth.validate();
  if (!(noise_sigma >= 0)) throw InvariantViolation("noise_sigma must be nonnegative");
  std::set<double> seen;
  for (const auto& d : deltas) {
    if (!seen.insert(d.value()).second) {
      throw InvariantViolation("synthetic deltas must be distinct");
    }
  }
  for (std::size_t i = 0; i < token_grid.size(); ++i) {
    if (token_grid[i].value == 0) {
      throw InvariantViolation("token grid must be positive");
    }
    if (i > 0 && !(token_grid[i - 1] < token_grid[i])) {
      throw InvariantViolation("token grid must be strictly increasing");
    }
  }
}

RunDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  auto unit_open = [&]() {
    // (0, 1]: 53 top bits, shifted into the unit interval.
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  };
  auto normal = [&]() {
    const double u1 = unit_open();
    const double u2 = unit_open();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  };

  ParsedCurves parsed;
  for (const auto& d : spec.deltas) {
    const std::string run_id = "synth-d" + format_delta(d.value());
    parsed.run_deltas.emplace(run_id, d);
    LossCurve train_curve, test_curve;
    train_curve.run_id = run_id;
    train_curve.split = Split::DomainTrain;
    test_curve.run_id = run_id;
    test_curve.split = Split::DomainTest;
    for (const auto& t : spec.token_grid) {
      const double train = eval_train_loss(spec.truth, t, d);
      const double test = train + eval_gap(spec.truth, t, d);
      if (!(train > 0) || !(test > 0)) {
        throw InvariantViolation("truth produces a nonpositive loss at " +
                                 std::to_string(t.value) + " tokens");
      }
      double train_v = train, test_v = test;
      if (spec.noise_sigma > 0) {
        train_v = train * std::exp(spec.noise_sigma * normal());
        test_v = test * std::exp(spec.noise_sigma * normal());
      }
      train_curve.points.push_back({t, train_v});
      test_curve.points.push_back({t, test_v});
    }
    parsed.curves.push_back(std::move(train_curve));
    parsed.curves.push_back(std::move(test_curve));
  }
  return assemble_dataset(parsed);
}

double pooled_residual_mse(const RunDataset& dataset,
                           const std::vector<MixtureFraction>& deltas,
                           const OverfitLawParams& params, LossSpace space,
                           bool weight_per_curve) {
  FitData data =
      assemble_fit_data(dataset, deltas, params.token_unit, weight_per_curve);
  return law_objective(params, data, space);
}

}  // namespace sptlaw
