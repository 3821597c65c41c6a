#include "sptlaw/cost.hpp"

#include <cmath>

namespace sptlaw {

void CostModel::validate() const {
  if (!(train_flops_per_param_token > 0) || !(infer_flops_per_param_token > 0)) {
    throw InvariantViolation("FLOP coefficients must be positive");
  }
  if (dollars_per_flop.has_value() && !(*dollars_per_flop > 0)) {
    throw InvariantViolation("dollars_per_flop must be positive when set");
  }
}

double pipeline_train_flops(const CostModel& m, Pipeline which) {
  m.validate();
  if (which == Pipeline::SPT) {
    return m.train_flops_per_param_token * static_cast<double>(m.spt_params) *
           (static_cast<double>(m.spt_pretrain_tokens.value) +
            static_cast<double>(m.spt_ft_tokens.value));
  }
  return m.train_flops_per_param_token * static_cast<double>(m.base_params) *
         static_cast<double>(m.base_ft_tokens.value);
}

std::optional<TokenCount> break_even_tokens(const CostModel& m) {
  m.validate();
  if (m.base_params <= m.spt_params) return std::nullopt;
  const double upfront_gap = pipeline_train_flops(m, Pipeline::SPT) -
                             pipeline_train_flops(m, Pipeline::Baseline);
  if (upfront_gap <= 0) return TokenCount{0};
  const double saving_per_token =
      m.infer_flops_per_param_token *
      static_cast<double>(m.base_params - m.spt_params);
  const double tokens = upfront_gap / saving_per_token;
  return TokenCount{static_cast<std::uint64_t>(std::llround(tokens))};
}

CostCurves cumulative_cost_curve(const CostModel& m,
                                 const std::vector<TokenCount>& inference_grid) {
  m.validate();
  for (std::size_t i = 1; i < inference_grid.size(); ++i) {
    if (!(inference_grid[i - 1] < inference_grid[i])) {
      throw DomainError("inference grid must be increasing");
    }
  }
  const double scale = m.dollars_per_flop.value_or(1.0);
  const double spt_upfront = pipeline_train_flops(m, Pipeline::SPT);
  const double base_upfront = pipeline_train_flops(m, Pipeline::Baseline);
  CostCurves curves;
  curves.in_dollars = m.dollars_per_flop.has_value();
  curves.spt.reserve(inference_grid.size());
  curves.baseline.reserve(inference_grid.size());
  for (const auto& t : inference_grid) {
    const double tok = static_cast<double>(t.value);
    curves.spt.emplace_back(
        t, scale * (spt_upfront + m.infer_flops_per_param_token *
                                      static_cast<double>(m.spt_params) * tok));
    curves.baseline.emplace_back(
        t, scale * (base_upfront + m.infer_flops_per_param_token *
                                       static_cast<double>(m.base_params) * tok));
  }
  return curves;
}

}  // namespace sptlaw
