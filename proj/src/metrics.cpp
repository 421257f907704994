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

#include "mvzigal/metrics.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "mvzigal/errors.hpp"

namespace mvz {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string opt(const std::optional<double>& x) { return x ? format_real(*x) : std::string(); }

std::optional<double> read_opt(const std::string& field) {
  if (field.empty()) return std::nullopt;
  return parse_real(field);
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> columns = {
      "epoch",  "method", "mean_R_single_raw", "mean_R_mv_raw", "mean_R_single_norm",
      "mean_R_mv_norm", "lambda", "tau", "violated", "loss", "grad_norm", "zigzag_gap",
      "wall_ms", "config_hash"};
  return columns;
}

std::string format_real(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

double parse_real(const std::string& text) {
  double out = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw FormatError("malformed number '" + text + "'");
  }
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> rows) {
  const auto& cols = metrics_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const EpochMetrics& r : rows) {
    out << r.epoch << ',' << r.method << ',' << format_real(r.mean_single_raw) << ','
        << format_real(r.mean_joint_raw) << ',' << format_real(r.mean_single_norm) << ','
        << format_real(r.mean_joint_norm) << ',' << opt(r.lambda) << ',' << opt(r.tau) << ','
        << (r.violated ? (*r.violated ? "1" : "0") : "") << ',' << format_real(r.loss) << ','
        << format_real(r.grad_norm) << ',' << opt(r.zigzag_gap) << ',' << opt(r.wall_ms) << ','
        << r.config_hash << '\n';
  }
}

std::vector<EpochMetrics> read_metrics_csv(std::istream& in) {
  const auto& cols = metrics_columns();
  std::string line;
  if (!std::getline(in, line)) throw FormatError("metrics csv: missing header");
  if (split_csv(line) != cols) throw FormatError("metrics csv line 1: header mismatch");
  std::vector<EpochMetrics> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    try {
      if (f.size() != cols.size()) {
        throw FormatError("expected " + std::to_string(cols.size()) + " fields, got " +
                          std::to_string(f.size()));
      }
      EpochMetrics r;
      int epoch = 0;
      auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), epoch);
      if (ec != std::errc() || ptr != f[0].data() + f[0].size() || f[0].empty()) {
        throw FormatError("malformed epoch '" + f[0] + "'");
      }
      r.epoch = epoch;
      r.method = f[1];
      r.mean_single_raw = parse_real(f[2]);
      r.mean_joint_raw = parse_real(f[3]);
      r.mean_single_norm = parse_real(f[4]);
      r.mean_joint_norm = parse_real(f[5]);
      r.lambda = read_opt(f[6]);
      r.tau = read_opt(f[7]);
      if (f[8] == "1") {
        r.violated = true;
      } else if (f[8] == "0") {
        r.violated = false;
      } else if (!f[8].empty()) {
        throw FormatError("malformed violated flag '" + f[8] + "'");
      }
      r.loss = parse_real(f[9]);
      r.grad_norm = parse_real(f[10]);
      r.zigzag_gap = read_opt(f[11]);
      r.wall_ms = read_opt(f[12]);
      r.config_hash = f[13];
      rows.push_back(std::move(r));
    } catch (const FormatError& e) {
      throw FormatError("metrics csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void write_metrics_file(const std::string& path, std::span<const EpochMetrics> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write metrics file '" + path + "'");
  write_metrics_csv(out, rows);
  if (!out) throw FormatError("failed writing metrics file '" + path + "'");
}

std::vector<EpochMetrics> read_metrics_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open metrics file '" + path + "'");
  return read_metrics_csv(in);
}

}  // namespace mvz
