#pragma once

#include <string>
#include <vector>

namespace slq {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/** Minimal self-contained SVG line plot (log-scale y optional; non-positive
 *  values are dropped in log mode). Good enough for convergence curves; CSV
 *  stays the canonical output. */
void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<PlotSeries>& series, bool log_y);

}  // namespace slq
