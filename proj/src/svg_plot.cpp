// Copyright 2026 The MVZigAL Authors
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

#include "mvzigal/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "mvzigal/errors.hpp"

namespace mvz {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    } else if (lo == hi) {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::optional<double> column_value(const EpochMetrics& m, const std::string& column) {
  if (column == "mean_R_single_raw") return m.mean_single_raw;
  if (column == "mean_R_mv_raw") return m.mean_joint_raw;
  if (column == "mean_R_single_norm") return m.mean_single_norm;
  if (column == "mean_R_mv_norm") return m.mean_joint_norm;
  if (column == "lambda") return m.lambda;
  if (column == "tau") return m.tau;
  if (column == "loss") return m.loss;
  if (column == "grad_norm") return m.grad_norm;
  if (column == "zigzag_gap") return m.zigzag_gap;
  throw ContractError("column '" + column + "' cannot be plotted");
}

}  // namespace

std::string render_svg(const PlotSpec& plot) {
  Range xr;
  Range yr;
  for (const PlotSeries& s : plot.series) {
    if (s.x.size() != s.y.size()) throw ShapeError("plot series '" + s.label + "' x/y mismatch");
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.settle();
  yr.settle();
  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kHeight - kBottom;
  const double y1 = kTop;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(plot.title) + "</text>\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" +
         num(y0) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" +
         num(y1) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double px = xr.map(fx, x0, x1);
    const double py = yr.map(fy, y0, y1);
    out += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + 18) + "\" text-anchor=\"middle\">" +
           tick(fx) + "</text>\n";
    out += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\">" +
           tick(fy) + "</text>\n";
  }
  out += "<text class=\"x-label\" x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 16) +
         "\" text-anchor=\"middle\">" + escape(plot.x_label) + "</text>\n";
  out += "<text class=\"y-label\" x=\"18\" y=\"" + num((y0 + y1) / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + num((y0 + y1) / 2) + ")\">" +
         escape(plot.y_label) + "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const PlotSeries& s = plot.series[k];
    const char* color = kPalette[k % (sizeof kPalette / sizeof kPalette[0])];
    out += "<g class=\"series\" data-label=\"" + escape(s.label) + "\">\n";
    if (plot.lines && s.x.size() > 1) {
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out += (i ? " " : "") + num(xr.map(s.x[i], x0, x1)) + "," + num(yr.map(s.y[i], y0, y1));
      }
      out += "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out += "<circle cx=\"" + num(xr.map(s.x[i], x0, x1)) + "\" cy=\"" +
             num(yr.map(s.y[i], y0, y1)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    out += "</g>\n";
    const double ly = kTop + 16.0 * static_cast<double>(k);
    out += "<rect x=\"" + num(x1 + 12) + "\" y=\"" + num(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
           color + "\"/>\n";
    out += "<text x=\"" + num(x1 + 26) + "\" y=\"" + num(ly + 1) + "\">" + escape(s.label) +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

const std::vector<std::string>& plotted_columns() {
  static const std::vector<std::string> cols = {"mean_R_single_raw", "mean_R_mv_raw", "lambda",
                                                "tau", "zigzag_gap"};
  return cols;
}

PlotSpec metrics_plot(const std::vector<NamedMetrics>& runs, const std::string& column) {
  PlotSpec plot;
  plot.title = column + " by epoch";
  plot.x_label = "epoch";
  plot.y_label = column;
  for (const auto& [name, rows] : runs) {
    PlotSeries s;
    s.label = name;
    for (const EpochMetrics& m : rows) {
      if (auto v = column_value(m, column)) {
        s.x.push_back(m.epoch);
        s.y.push_back(*v);
      }
    }
    if (!s.x.empty()) plot.series.push_back(std::move(s));
  }
  return plot;
}

PlotSpec tradeoff_plot(const std::vector<NamedMetrics>& runs) {
  PlotSpec plot;
  plot.title = "final-epoch reward trade-off";
  plot.x_label = "mean_R_single_raw";
  plot.y_label = "mean_R_mv_raw";
  plot.lines = false;
  for (const auto& [name, rows] : runs) {
    if (rows.empty()) continue;
    plot.series.push_back({name, {rows.back().mean_single_raw}, {rows.back().mean_joint_raw}});
  }
  return plot;
}

}  // namespace mvz
