#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sptlaw/types.hpp"

namespace sptlaw {

struct SvgSeries {
  std::string label;
  std::string color;  // CSS color
  std::vector<std::pair<double, double>> points;  // (tokens, loss)
  bool dashed = false;
};

/// Static SVG 1.1 line chart, loss against log10 tokens. When a fitted
/// boundary is given, a vertical marker separates fit from extrapolation.
std::string render_loss_chart(const std::string& title,
                              const std::vector<SvgSeries>& series,
                              std::optional<double> fitted_boundary_tokens);

}  // namespace sptlaw
