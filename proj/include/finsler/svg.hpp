// SPDX-License-Identifier: Apache-2.0
//
// Minimal line plots as standalone SVG documents.
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace finsler {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  /// Draw as a right-continuous step function.
  bool step = false;
  bool markers = true;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool log_x = false;
  bool log_y = false;
};

std::string render_svg(const Plot& plot);

/// lambda_k against k.
Plot eigenvalue_staircase(const std::vector<double>& lambdas, const std::string& title);
/// N(lambda) = #{k : lambda_k < lambda}.
Plot counting_function_plot(const std::vector<double>& lambdas, const std::string& title);

}  // namespace finsler
