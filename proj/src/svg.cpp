#include "sptlaw/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sptlaw {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_sig(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

std::string render_loss_chart(const std::string& title,
                              const std::vector<SvgSeries>& series,
                              std::optional<double> fitted_boundary_tokens) {
  constexpr double kW = 760, kH = 440;
  constexpr double kL = 70, kR = 20, kT = 40, kB = 50;
  const double plot_w = kW - kL - kR;
  const double plot_h = kH - kT - kB;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (x > 0) {
        xmin = std::min(xmin, std::log10(x));
        xmax = std::max(xmax, std::log10(x));
      }
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!(xmin < xmax)) {
    xmin = 0;
    xmax = 1;
  }
  if (!(ymin < ymax)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double lx) { return kL + (lx - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kT + (ymax - y) / (ymax - ymin) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         fmt(kW) + "\" height=\"" + fmt(kH) + "\" viewBox=\"0 0 " + fmt(kW) +
         " " + fmt(kH) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";

  // Frame and decade gridlines.
  svg += "<rect x=\"" + fmt(kL) + "\" y=\"" + fmt(kT) + "\" width=\"" +
         fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
         "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int d = static_cast<int>(std::ceil(xmin)); d <= static_cast<int>(std::floor(xmax)); ++d) {
    const double x = px(d);
    svg += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kT) + "\" x2=\"" + fmt(x) +
           "\" y2=\"" + fmt(kT + plot_h) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(kH - kB + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">1e" + std::to_string(d) + "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    svg += "<text x=\"" + fmt(kL - 6) + "\" y=\"" + fmt(py(y) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + fmt_sig(y) + "</text>\n";
  }
  svg += "<text x=\"" + fmt(kW / 2) + "\" y=\"" + fmt(kH - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">pretraining tokens</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(kT + plot_h / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 " + fmt(kT + plot_h / 2) +
         ")\">loss (nats)</text>\n";

  if (fitted_boundary_tokens.has_value() && *fitted_boundary_tokens > 0) {
    const double x = px(std::log10(*fitted_boundary_tokens));
    svg += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kT) + "\" x2=\"" + fmt(x) +
           "\" y2=\"" + fmt(kT + plot_h) +
           "\" stroke=\"#999\" stroke-dasharray=\"2,4\"/>\n";
    svg += "<text x=\"" + fmt(x + 4) + "\" y=\"" + fmt(kT + 14) +
           "\" font-family=\"sans-serif\" font-size=\"10\" "
           "fill=\"#666\">extrapolation</text>\n";
  }

  double legend_y = kT + 14;
  for (const auto& s : series) {
    std::string pts;
    for (const auto& [x, y] : s.points) {
      if (x <= 0) continue;
      pts += fmt(px(std::log10(x))) + "," + fmt(py(y)) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"" +
           (s.dashed ? " stroke-dasharray=\"6,3\"" : "") + " points=\"" + pts +
           "\"/>\n";
    svg += "<line x1=\"" + fmt(kL + 10) + "\" y1=\"" + fmt(legend_y) +
           "\" x2=\"" + fmt(kL + 34) + "\" y2=\"" + fmt(legend_y) +
           "\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" +
           (s.dashed ? " stroke-dasharray=\"6,3\"" : "") + "/>\n";
    svg += "<text x=\"" + fmt(kL + 40) + "\" y=\"" + fmt(legend_y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label +
           "</text>\n";
    legend_y += 16;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace sptlaw
