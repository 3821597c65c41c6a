#include "optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sptlaw::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded(const Objective& f, const std::vector<double>& x,
               std::uint64_t& evals) {
  ++evals;
  const double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

}  // namespace

OptimResult nelder_mead(const Objective& f, std::vector<double> x0,
                        const NelderMeadOptions& opt) {
  const std::size_t n = x0.size();
  OptimResult res;
  if (n == 0) {
    res.x = std::move(x0);
    res.converged = true;
    return res;
  }

  // Gao-Han adaptive coefficients.
  const double nd = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / nd;
  const double gamma = 0.75 - 1.0 / (2.0 * nd);
  const double delta = 1.0 - 1.0 / nd;

  std::vector<std::vector<double>> verts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double step = opt.initial_step;
    if (verts[i + 1][i] != 0.0) {
      step = std::max(step, 0.05 * std::abs(verts[i + 1][i]));
    }
    verts[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= n; ++i) fv[i] = guarded(f, verts[i], res.evals);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);

  for (std::uint64_t iter = 0; iter < opt.max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0];
    const std::size_t worst = order[n];
    const std::size_t second_worst = order[n - 1];

    const double spread = fv[worst] - fv[best];
    if (std::isfinite(fv[worst]) &&
        spread <= opt.ftol_rel * (std::abs(fv[best]) + 1e-300)) {
      res.converged = true;
      break;
    }

    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        if (i != worst) s += verts[i][j];
      }
      centroid[j] = s / nd;
    }

    for (std::size_t j = 0; j < n; ++j) {
      xr[j] = centroid[j] + alpha * (centroid[j] - verts[worst][j]);
    }
    const double fr = guarded(f, xr, res.evals);

    if (fr < fv[best]) {
      for (std::size_t j = 0; j < n; ++j) {
        xe[j] = centroid[j] + beta * (xr[j] - centroid[j]);
      }
      const double fe = guarded(f, xe, res.evals);
      if (fe < fr) {
        verts[worst] = xe;
        fv[worst] = fe;
      } else {
        verts[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second_worst]) {
      verts[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      if (outside) {
        for (std::size_t j = 0; j < n; ++j) {
          xc[j] = centroid[j] + gamma * (xr[j] - centroid[j]);
        }
      } else {
        for (std::size_t j = 0; j < n; ++j) {
          xc[j] = centroid[j] - gamma * (xr[j] - centroid[j]);
        }
      }
      const double fc = guarded(f, xc, res.evals);
      if (fc < std::min(fr, fv[worst])) {
        verts[worst] = xc;
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < n; ++j) {
            verts[i][j] = verts[best][j] + delta * (verts[i][j] - verts[best][j]);
          }
          fv[i] = guarded(f, verts[i], res.evals);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (fv[i] < fv[best]) best = i;
  }
  res.x = verts[best];
  res.fx = fv[best];
  return res;
}

OptimResult coordinate_polish(const Objective& f, std::vector<double> x0,
                              double fx0, double initial_step, double step_tol,
                              std::uint64_t max_evals) {
  OptimResult res;
  res.x = std::move(x0);
  res.fx = fx0;
  const std::size_t n = res.x.size();
  double step = initial_step;
  std::vector<double> trial = res.x;
  while (step > step_tol && res.evals < max_evals) {
    bool improved = false;
    for (std::size_t j = 0; j < n && res.evals < max_evals; ++j) {
      for (const double dir : {+1.0, -1.0}) {
        trial = res.x;
        trial[j] += dir * step;
        const double ft = guarded(f, trial, res.evals);
        if (ft < res.fx) {
          // Ride the descent direction while it keeps paying.
          res.x = trial;
          res.fx = ft;
          improved = true;
          while (res.evals < max_evals) {
            trial[j] += dir * step;
            const double fn = guarded(f, trial, res.evals);
            if (fn < res.fx) {
              res.x = trial;
              res.fx = fn;
            } else {
              break;
            }
          }
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  res.converged = step <= step_tol;
  return res;
}

std::vector<double> halton_point(std::size_t dim, std::uint64_t k) {
  static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                    31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  std::vector<double> pt(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const std::uint64_t base =
        static_cast<std::uint64_t>(kPrimes[d % std::size(kPrimes)]);
    double x = 0.0;
    double denom = 1.0;
    std::uint64_t i = k;
    while (i > 0) {
      denom *= static_cast<double>(base);
      x += static_cast<double>(i % base) / denom;
      i /= base;
    }
    pt[d] = x;
  }
  return pt;
}

}  // namespace sptlaw::detail
