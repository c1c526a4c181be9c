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

#include "catstab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>

#include "catstab/errors.hpp"

namespace catstab {

namespace {

constexpr const char* kFont = "Helvetica, Arial, sans-serif";
constexpr const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                         "#ff7f0e", "#9467bd", "#8c564b"};
constexpr int kNumSeriesColors = 6;
constexpr const char* kMissingColor = "#9e9e9e";

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round tick steps to 1, 2, or 5 times a power of ten.
std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  const double raw_step = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mult * mag >= raw_step) {
      step = mult * mag;
      break;
    }
  }
  std::vector<double> ticks;
  const double first = std::ceil(lo / step - 1e-9) * step;
  for (double t = first; t <= hi + 1e-9 * step; t += step) {
    // Snap values that should be exactly zero.
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return ticks;
}

struct Rgb {
  double r, g, b;
};

Rgb hex_color(const char* hex) {
  auto nibble = [](char c) {
    return c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10;
  };
  auto channel = [&](int i) {
    return static_cast<double>(nibble(hex[i]) * 16 + nibble(hex[i + 1]));
  };
  return Rgb{channel(1), channel(3), channel(5)};
}

std::string rgb_to_hex(const Rgb& c) {
  char buf[8];
  auto clamp = [](double v) {
    return static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0)));
  };
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", clamp(c.r), clamp(c.g),
                clamp(c.b));
  return buf;
}

// Piecewise-linear interpolation through color stops at uniform positions.
std::string palette_color(double t, const std::vector<Rgb>& stops) {
  t = std::clamp(t, 0.0, 1.0);
  const double scaled = t * static_cast<double>(stops.size() - 1);
  const int lo = std::min(static_cast<int>(scaled),
                          static_cast<int>(stops.size()) - 2);
  const double f = scaled - lo;
  const Rgb& a = stops[lo];
  const Rgb& b = stops[lo + 1];
  return rgb_to_hex(Rgb{a.r + f * (b.r - a.r), a.g + f * (b.g - a.g),
                        a.b + f * (b.b - a.b)});
}

const std::vector<Rgb>& diverging_stops() {
  // Blue through neutral to red.
  static const std::vector<Rgb> stops = {
      hex_color("#2166ac"), hex_color("#f7f7f7"), hex_color("#b2182b")};
  return stops;
}

const std::vector<Rgb>& sequential_stops() {
  // Dark violet to bright yellow.
  static const std::vector<Rgb> stops = {
      hex_color("#440154"), hex_color("#3b528b"), hex_color("#21918c"),
      hex_color("#5ec962"), hex_color("#fde725")};
  return stops;
}

void open_document(std::ostringstream& out, int width, int height) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n"
      << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
}

void draw_title(std::ostringstream& out, const std::string& title, int width) {
  if (title.empty()) return;
  out << "<text x=\"" << width / 2
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"" << kFont
      << "\" font-size=\"15\" fill=\"#222222\">" << xml_escape(title)
      << "</text>\n";
}

void draw_axis_labels(std::ostringstream& out, const std::string& x_label,
                      const std::string& y_label, double cx, double bottom_y,
                      double cy) {
  if (!x_label.empty()) {
    out << "<text x=\"" << px(cx) << "\" y=\"" << px(bottom_y)
        << "\" text-anchor=\"middle\" font-family=\"" << kFont
        << "\" font-size=\"13\" fill=\"#222222\">" << xml_escape(x_label)
        << "</text>\n";
  }
  if (!y_label.empty()) {
    out << "<text x=\"16\" y=\"" << px(cy)
        << "\" text-anchor=\"middle\" font-family=\"" << kFont
        << "\" font-size=\"13\" fill=\"#222222\" transform=\"rotate(-90 16 "
        << px(cy) << ")\">" << xml_escape(y_label) << "</text>\n";
  }
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
  void pad() {
    if (lo == hi) {
      const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= d;
      hi += d;
    } else {
      const double d = (hi - lo) * 0.04;
      lo -= d;
      hi += d;
    }
  }
};

}  // namespace

std::string svg_line_chart(const LineChartSpec& spec) {
  for (const LineChartSeries& s : spec.series) {
    if (s.x.size() != s.y.size()) {
      throw InvalidArgumentError("svg_line_chart: series \"" + s.label +
                                 "\" has " + std::to_string(s.x.size()) +
                                 " x values but " + std::to_string(s.y.size()) +
                                 " y values");
    }
  }
  Range xr, yr;
  for (const LineChartSeries& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        xr.include(s.x[i]);
        yr.include(s.y[i]);
      }
    }
  }
  if (!xr.valid() || !yr.valid()) {
    throw InvalidArgumentError(
        "svg_line_chart: no finite data points to draw");
  }
  xr.pad();
  yr.pad();

  const double left = 72, right = 24, top = 44, bottom = 56;
  const double plot_w = spec.width - left - right;
  const double plot_h = spec.height - top - bottom;
  const auto map_x = [&](double v) {
    return left + (v - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  const auto map_y = [&](double v) {
    return top + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  std::ostringstream out;
  open_document(out, spec.width, spec.height);
  draw_title(out, spec.title, spec.width);

  // Gridlines and ticks.
  for (double t : nice_ticks(xr.lo, xr.hi)) {
    const double x = map_x(t);
    out << "<line x1=\"" << px(x) << "\" y1=\"" << px(top) << "\" x2=\""
        << px(x) << "\" y2=\"" << px(top + plot_h)
        << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << px(x) << "\" y=\"" << px(top + plot_h + 18)
        << "\" text-anchor=\"middle\" font-family=\"" << kFont
        << "\" font-size=\"11\" fill=\"#444444\">" << num(t) << "</text>\n";
  }
  for (double t : nice_ticks(yr.lo, yr.hi)) {
    const double y = map_y(t);
    out << "<line x1=\"" << px(left) << "\" y1=\"" << px(y) << "\" x2=\""
        << px(left + plot_w) << "\" y2=\"" << px(y)
        << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << px(left - 8) << "\" y=\"" << px(y + 4)
        << "\" text-anchor=\"end\" font-family=\"" << kFont
        << "\" font-size=\"11\" fill=\"#444444\">" << num(t) << "</text>\n";
  }
  // Axes frame.
  out << "<rect x=\"" << px(left) << "\" y=\"" << px(top) << "\" width=\""
      << px(plot_w) << "\" height=\"" << px(plot_h)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  // Data, one polyline per contiguous finite run.
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const LineChartSeries& s = spec.series[k];
    const char* color = kSeriesColors[k % kNumSeriesColors];
    std::string points;
    const auto flush = [&]() {
      if (points.find(' ') != std::string::npos) {
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.8\" points=\"" << points << "\"/>\n";
      } else if (!points.empty()) {
        // Single isolated point: draw a dot so it is not lost.
        const auto comma = points.find(',');
        out << "<circle cx=\"" << points.substr(0, comma) << "\" cy=\""
            << points.substr(comma + 1) << "\" r=\"2.2\" fill=\"" << color
            << "\"/>\n";
      }
      points.clear();
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        if (!points.empty()) points += ' ';
        points += px(map_x(s.x[i])) + "," + px(map_y(s.y[i]));
      } else {
        flush();
      }
    }
    flush();
  }

  // Legend for multi-series charts.
  if (spec.series.size() > 1) {
    const double lx = left + plot_w - 150;
    double ly = top + 12;
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
      const char* color = kSeriesColors[k % kNumSeriesColors];
      out << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly) << "\" x2=\""
          << px(lx + 22) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
          << "\" stroke-width=\"2.2\"/>\n";
      out << "<text x=\"" << px(lx + 28) << "\" y=\"" << px(ly + 4)
          << "\" font-family=\"" << kFont
          << "\" font-size=\"12\" fill=\"#222222\">"
          << xml_escape(spec.series[k].label) << "</text>\n";
      ly += 18;
    }
  }

  draw_axis_labels(out, spec.x_label, spec.y_label, left + plot_w / 2,
                   spec.height - 12.0, top + plot_h / 2);
  out << "</svg>\n";
  return out.str();
}

std::string svg_heatmap(const HeatmapSpec& spec) {
  const int nx = static_cast<int>(spec.x_values.size());
  const int ny = static_cast<int>(spec.y_values.size());
  if (nx == 0 || ny == 0) {
    throw InvalidArgumentError("svg_heatmap: axes must be nonempty");
  }
  if (spec.values.rows() != nx || spec.values.cols() != ny) {
    throw InvalidArgumentError(
        "svg_heatmap: value matrix is " + std::to_string(spec.values.rows()) +
        "x" + std::to_string(spec.values.cols()) + " but the axes imply " +
        std::to_string(nx) + "x" + std::to_string(ny));
  }

  Range vr;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) vr.include(spec.values(i, j));
  double v_lo = vr.valid() ? vr.lo : 0.0;
  double v_hi = vr.valid() ? vr.hi : 1.0;
  if (spec.diverging) {
    const double extent = std::max({std::abs(v_lo), std::abs(v_hi), 1e-300});
    v_lo = -extent;
    v_hi = extent;
  } else if (v_lo == v_hi) {
    v_hi = v_lo + 1.0;
  }
  const std::vector<Rgb>& stops =
      spec.diverging ? diverging_stops() : sequential_stops();
  const auto cell_color = [&](double v) {
    if (!std::isfinite(v)) return std::string(kMissingColor);
    return palette_color((v - v_lo) / (v_hi - v_lo), stops);
  };

  const double left = 76, right = 96, top = 44, bottom = 56;
  const double plot_w = spec.width - left - right;
  const double plot_h = spec.height - top - bottom;
  const double cw = plot_w / nx;
  const double ch = plot_h / ny;

  std::ostringstream out;
  open_document(out, spec.width, spec.height);
  draw_title(out, spec.title, spec.width);

  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double x = left + i * cw;
      const double y = top + (ny - 1 - j) * ch;
      out << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\""
          << px(cw + 0.5) << "\" height=\"" << px(ch + 0.5) << "\" fill=\""
          << cell_color(spec.values(i, j)) << "\"/>\n";
    }
  }

  // Maximum marker: hollow white square on the best finite cell.
  if (spec.mark_maximum) {
    int bi = -1, bj = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const double v = spec.values(i, j);
        if (std::isfinite(v) && v > best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi >= 0) {
      const double inset = 0.18;
      out << "<rect x=\"" << px(left + (bi + inset) * cw) << "\" y=\""
          << px(top + (ny - 1 - bj + inset) * ch) << "\" width=\""
          << px(cw * (1 - 2 * inset)) << "\" height=\""
          << px(ch * (1 - 2 * inset))
          << "\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"2.5\"/>\n";
    }
  }

  // Axis tick labels on a subset of cell centers.
  const int x_stride = std::max(1, (nx + 7) / 8);
  for (int i = 0; i < nx; i += x_stride) {
    out << "<text x=\"" << px(left + (i + 0.5) * cw) << "\" y=\""
        << px(top + plot_h + 18) << "\" text-anchor=\"middle\" font-family=\""
        << kFont << "\" font-size=\"11\" fill=\"#444444\">"
        << num(spec.x_values[i]) << "</text>\n";
  }
  const int y_stride = std::max(1, (ny + 7) / 8);
  for (int j = 0; j < ny; j += y_stride) {
    out << "<text x=\"" << px(left - 8) << "\" y=\""
        << px(top + (ny - 1 - j + 0.5) * ch + 4)
        << "\" text-anchor=\"end\" font-family=\"" << kFont
        << "\" font-size=\"11\" fill=\"#444444\">" << num(spec.y_values[j])
        << "</text>\n";
  }
  out << "<rect x=\"" << px(left) << "\" y=\"" << px(top) << "\" width=\""
      << px(plot_w) << "\" height=\"" << px(plot_h)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  // Vertical color scale.
  const double bar_x = left + plot_w + 24;
  const double bar_w = 16;
  const int bar_steps = 64;
  for (int k = 0; k < bar_steps; ++k) {
    const double frac = (k + 0.5) / bar_steps;
    const double y = top + plot_h * (1.0 - (k + 1.0) / bar_steps);
    out << "<rect x=\"" << px(bar_x) << "\" y=\"" << px(y) << "\" width=\""
        << px(bar_w) << "\" height=\"" << px(plot_h / bar_steps + 0.5)
        << "\" fill=\"" << palette_color(frac, stops) << "\"/>\n";
  }
  out << "<rect x=\"" << px(bar_x) << "\" y=\"" << px(top) << "\" width=\""
      << px(bar_w) << "\" height=\"" << px(plot_h)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  const double labels[3] = {v_hi, (v_lo + v_hi) / 2, v_lo};
  const double label_y[3] = {top + 4, top + plot_h / 2 + 4, top + plot_h + 4};
  for (int k = 0; k < 3; ++k) {
    out << "<text x=\"" << px(bar_x + bar_w + 6) << "\" y=\"" << px(label_y[k])
        << "\" font-family=\"" << kFont
        << "\" font-size=\"11\" fill=\"#444444\">" << num(labels[k])
        << "</text>\n";
  }

  draw_axis_labels(out, spec.x_label, spec.y_label, left + plot_w / 2,
                   spec.height - 12.0, top + plot_h / 2);
  out << "</svg>\n";
  return out.str();
}

}  // namespace catstab
