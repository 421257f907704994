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

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mvzigal/metrics.hpp"

namespace mvz {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool lines = true;  // false draws markers only (scatter)
};

// Every data point becomes one <circle>; connected series also get a
// <polyline>. Pure function of its input.
std::string render_svg(const PlotSpec& plot);

using NamedMetrics = std::pair<std::string, std::vector<EpochMetrics>>;

/// Metric columns plotted against epoch.
const std::vector<std::string>& plotted_columns();

/// One curve plot for `column`, one series per run; runs without values in
/// that column are left out.
PlotSpec metrics_plot(const std::vector<NamedMetrics>& runs, const std::string& column);

/// Final-epoch mean raw single-view vs joint-view reward, one point per run.
PlotSpec tradeoff_plot(const std::vector<NamedMetrics>& runs);

}  // namespace mvz
