#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace sptlaw::detail {

using Objective = std::function<double(const std::vector<double>&)>;

struct OptimResult {
  std::vector<double> x;
  double fx = 0.0;
  std::uint64_t evals = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  std::uint64_t max_iterations = 20000;
  double ftol_rel = 1e-10;
  double initial_step = 0.5;
};

/// Downhill simplex with the dimension-adaptive expansion/contraction
/// coefficients. Stops on relative f-spread below ftol_rel.
OptimResult nelder_mead(const Objective& f, std::vector<double> x0,
                        const NelderMeadOptions& opt);

/// Compass-search polish: cyclic axis steps with halving on stall.
OptimResult coordinate_polish(const Objective& f, std::vector<double> x0,
                              double fx0, double initial_step,
                              double step_tol, std::uint64_t max_evals);

/// k-th point of the Halton sequence in [0,1)^dim (1-based k recommended;
/// bases are the first dim primes).
std::vector<double> halton_point(std::size_t dim, std::uint64_t k);

}  // namespace sptlaw::detail
