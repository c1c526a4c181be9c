// Copyright 2026 The Catstab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Self-contained SVG renderers for the experiment artifacts: line charts for
// time series and heatmaps for matrices over labeled axes.  All numbers are
// formatted through fixed printf patterns, so identical inputs produce
// byte-identical documents.

#ifndef CATSTAB_SVG_HPP
#define CATSTAB_SVG_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace catstab {

struct LineChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // a NaN sample breaks the polyline
};

struct LineChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<LineChartSeries> series;
  int width = 640;
  int height = 420;
};

// Renders every series as a polyline over shared axes, with ticks, light
// gridlines, and (for more than one series) a legend.  Throws
// InvalidArgumentError when no series holds a finite point or when a series
// has mismatched x/y lengths.
std::string svg_line_chart(const LineChartSpec& spec);

struct HeatmapSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x_values;  // cell centers, ascending, size nx
  std::vector<double> y_values;  // cell centers, ascending, size ny
  // values(i, j) belongs to the cell at (x_values[i], y_values[j]).
  // NaN cells render grey.
  Eigen::MatrixXd values;
  // Diverging palettes are centered on zero (negative blue, positive red,
  // zero neutral); the default palette is sequential dark-to-bright.
  bool diverging = false;
  // Draw a hollow white square on the cell holding the largest finite value.
  bool mark_maximum = false;
  int width = 640;
  int height = 480;
};

// Renders the matrix as colored cells with a vertical color scale.  Throws
// InvalidArgumentError when the axes are empty or do not match the matrix
// shape.
std::string svg_heatmap(const HeatmapSpec& spec);

}  // namespace catstab

#endif  // CATSTAB_SVG_HPP
