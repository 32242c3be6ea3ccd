#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rbfmix {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  int width = 640;
  int height = 420;
};

/// Writes the series as step functions in a standalone SVG document.
void write_step_plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts, std::ostream& out);

}  // namespace rbfmix
