#pragma once

#include <string>
#include <vector>

namespace sdg {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static line chart rendered as a standalone SVG document. Log axes drop
/// non-positive samples.
struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;

  [[nodiscard]] std::string svg(int width = 640, int height = 420) const;
};

}  // namespace sdg
