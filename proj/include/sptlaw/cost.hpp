#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sptlaw/types.hpp"

namespace sptlaw {

/// FLOP accounting for the SPT-a-small-model vs finetune-a-big-model
/// comparison. Defaults follow dense-transformer convention (6 train / 2
/// inference FLOPs per parameter-token), a 1B SPT model pretrained for
/// 200B tokens, a 3B baseline, and 1.5B finetuning tokens each (five
/// epochs of a 300M-token corpus).
struct CostModel {
  double train_flops_per_param_token = 6.0;
  double infer_flops_per_param_token = 2.0;
  std::uint64_t spt_params = 1'000'000'000ULL;
  TokenCount spt_pretrain_tokens{200'000'000'000ULL};
  TokenCount spt_ft_tokens{1'500'000'000ULL};
  std::uint64_t base_params = 3'000'000'000ULL;
  TokenCount base_ft_tokens{1'500'000'000ULL};
  std::optional<double> dollars_per_flop;

  void validate() const;
};

enum class Pipeline { SPT, Baseline };

/// SPT: c_train * N_spt * (T_pretrain + T_ft); Baseline: c_train * N_base * T_ft.
double pipeline_train_flops(const CostModel& m, Pipeline which);

/// Inference tokens at which cumulative SPT cost crosses below the
/// baseline: (upfront difference) / (c_infer * (N_base - N_spt)).
/// nullopt when the baseline is not larger (no per-token saving);
/// zero when SPT is already cheaper upfront.
std::optional<TokenCount> break_even_tokens(const CostModel& m);

struct CostCurves {
  // Parallel series over the same inference-token grid.
  std::vector<std::pair<TokenCount, double>> spt;
  std::vector<std::pair<TokenCount, double>> baseline;
  bool in_dollars = false;  // scaled by dollars_per_flop when present
};

CostCurves cumulative_cost_curve(const CostModel& m,
                                 const std::vector<TokenCount>& inference_grid);

}  // namespace sptlaw
