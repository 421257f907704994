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

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvz {

/// One row of the per-epoch metrics table. Controller fields are absent for
/// methods without a constraint; the gap is absent on epochs that skip
/// evaluation; wall time is absent when not recorded.
struct EpochMetrics {
  int epoch = 0;
  std::string method;
  double mean_single_raw = 0.0;
  double mean_joint_raw = 0.0;
  double mean_single_norm = 0.0;
  double mean_joint_norm = 0.0;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<bool> violated;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::optional<double> zigzag_gap;
  std::optional<double> wall_ms;
  std::string config_hash;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

const std::vector<std::string>& metrics_columns();

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> rows);
// Header must match metrics_columns() exactly; malformed rows raise
// FormatError with their line number.
std::vector<EpochMetrics> read_metrics_csv(std::istream& in);

void write_metrics_file(const std::string& path, std::span<const EpochMetrics> rows);
std::vector<EpochMetrics> read_metrics_file(const std::string& path);

// Shortest decimal text that parses back to the same double.
std::string format_real(double x);
double parse_real(const std::string& text);

}  // namespace mvz
