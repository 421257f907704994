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

#include "mvzigal/scene.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mvzigal/errors.hpp"
#include "mvzigal/rng.hpp"

namespace mvz {

SceneSpec make_scene(int prompt, int views, std::uint64_t seed, int dim, double gamma) {
  if (views < 1) throw ContractError("make_scene needs V >= 1");
  if (dim < 2) throw ContractError("make_scene needs d >= 2");
  Rng rng(derive_seed({seed, static_cast<std::uint64_t>(prompt), 0x5ce7e}));
  SceneSpec s;
  s.prompt = prompt;
  s.seed = seed;
  s.gamma = gamma;
  s.base.resize(static_cast<std::size_t>(dim));
  for (double& b : s.base) b = rng.uniform(-1.0, 1.0);
  for (int v = 0; v < views; ++v) {
    s.angles.push_back(2.0 * std::numbers::pi * v / views);
    std::vector<double> g(static_cast<std::size_t>(dim));
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : g) {
        x = rng.normal();
        norm += x * x;
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (double& x : g) x *= gamma / norm;
    s.offsets.push_back(std::move(g));
  }
  return s;
}

std::vector<SceneSpec> make_scene_bank(int prompts, int views, std::uint64_t seed, int dim,
                                       double gamma) {
  std::vector<SceneSpec> bank;
  bank.reserve(static_cast<std::size_t>(prompts));
  for (int p = 0; p < prompts; ++p) bank.push_back(make_scene(p, views, seed, dim, gamma));
  return bank;
}

std::vector<double> rotate(std::span<const double> point, double angle) {
  std::vector<double> out(point.begin(), point.end());
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  out[0] = c * point[0] - s * point[1];
  out[1] = s * point[0] + c * point[1];
  return out;
}

std::vector<double> target_view(const SceneSpec& scene, int view) {
  if (view < 0 || view >= scene.views()) {
    throw LookupError("view " + std::to_string(view) + " outside scene");
  }
  return rotate(scene.base, scene.angles[static_cast<std::size_t>(view)]);
}

double single_view_reward(std::span<const double> x0_view, const SceneSpec& scene, int view) {
  const std::vector<double> target = target_view(scene, view);
  const auto& offset = scene.offsets[static_cast<std::size_t>(view)];
  double sq = 0.0;
  for (std::size_t c = 0; c < target.size(); ++c) {
    const double diff = x0_view[c] - (target[c] + offset[c]);
    sq += diff * diff;
  }
  return -sq;
}

double joint_view_reward(const DenseArray& x0, const SceneSpec& scene) {
  const auto views = static_cast<std::size_t>(scene.views());
  if (x0.rows() != views) {
    throw ContractError("joint_view_reward expects " + std::to_string(views) + " views");
  }
  const std::size_t d = x0.cols();
  std::vector<std::vector<double>> u;
  std::vector<double> mean(d, 0.0);
  for (std::size_t v = 0; v < views; ++v) {
    u.push_back(rotate(x0.row(v), -scene.angles[v]));
    for (std::size_t c = 0; c < d; ++c) mean[c] += u.back()[c];
  }
  for (double& m : mean) m /= static_cast<double>(views);
  double acc = 0.0;
  for (const auto& p : u) {
    for (std::size_t c = 0; c < d; ++c) acc += (p[c] - mean[c]) * (p[c] - mean[c]);
  }
  return -acc / static_cast<double>(views);
}

ConstrainedOptimum constrained_optimum_oracle(const SceneSpec& scene, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("constrained_optimum_oracle needs lambda >= 0");
  const auto views = static_cast<std::size_t>(scene.views());
  const auto d = static_cast<std::size_t>(scene.dim());
  // Anchors a_v = y + Rot(-theta_v) delta_v in the view frame. Stationarity
  // gives mean(u) = mean(a) and u_v = (a_v + k * abar) / (1 + k), k = lambda / V.
  DenseArray anchors(Shape{views, d});
  std::vector<double> abar(d, 0.0);
  for (std::size_t v = 0; v < views; ++v) {
    const std::vector<double> back = rotate(scene.offsets[v], -scene.angles[v]);
    for (std::size_t c = 0; c < d; ++c) {
      anchors.at(v, c) = scene.base[c] + back[c];
      abar[c] += anchors.at(v, c);
    }
  }
  for (double& a : abar) a /= static_cast<double>(views);
  const double k = lambda / static_cast<double>(views);
  ConstrainedOptimum out;
  out.points = DenseArray(Shape{views, d});
  out.samples = DenseArray(Shape{views, d});
  for (std::size_t v = 0; v < views; ++v) {
    for (std::size_t c = 0; c < d; ++c) {
      out.points.at(v, c) = (anchors.at(v, c) + k * abar[c]) / (1.0 + k);
    }
    const std::vector<double> x0 = rotate(out.points.row(v), scene.angles[v]);
    for (std::size_t c = 0; c < d; ++c) out.samples.at(v, c) = x0[c];
    out.sum_single += single_view_reward(out.samples.row(v), scene, static_cast<int>(v));
  }
  out.joint = joint_view_reward(out.samples, scene);
  return out;
}

double RewardRecord::mean_single() const {
  double acc = 0.0;
  for (double r : single) acc += r;
  return acc / static_cast<double>(single.size());
}

double RewardRecord::mean_single_norm() const {
  double acc = 0.0;
  for (double r : single_norm) acc += r;
  return acc / static_cast<double>(single_norm.size());
}

RewardRecord score_trajectory(const MultiviewTrajectory& traj, const SceneSpec& scene) {
  RewardRecord rec;
  rec.tag = traj.mode;
  const DenseArray& x0 = traj.final_sample();
  for (int v = 0; v < scene.views(); ++v) {
    rec.single.push_back(single_view_reward(x0.row(static_cast<std::size_t>(v)), scene, v));
  }
  rec.joint = joint_view_reward(x0, scene);
  return rec;
}

namespace {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  double x = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), x);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw FormatError("scene record: bad number '" + token + "'");
  }
  return x;
}

void write_list(std::ostream& out, const char* key, const std::vector<double>& values) {
  out << key;
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

std::vector<double> read_list(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("scene record: missing '" + key + "'");
  std::istringstream ls(line);
  std::string head;
  ls >> head;
  if (head != key) throw FormatError("scene record: expected '" + key + "', got '" + head + "'");
  std::vector<double> values;
  std::string tok;
  while (ls >> tok) values.push_back(parse_double(tok));
  return values;
}

}  // namespace

void write_scene_record(std::ostream& out, const SceneSpec& scene) {
  out << "scene " << scene.prompt << ' ' << scene.seed << ' ' << format_double(scene.gamma)
      << ' ' << scene.views() << ' ' << scene.dim() << '\n';
  write_list(out, "base", scene.base);
  write_list(out, "angles", scene.angles);
  for (const auto& o : scene.offsets) write_list(out, "offset", o);
}

SceneSpec read_scene_record(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("scene record: empty input");
  std::istringstream hs(line);
  std::string head;
  std::string gamma;
  int views = 0;
  int dim = 0;
  SceneSpec s;
  hs >> head >> s.prompt >> s.seed >> gamma >> views >> dim;
  if (head != "scene" || !hs || views < 1 || dim < 2) {
    throw FormatError("scene record: bad header '" + line + "'");
  }
  s.gamma = parse_double(gamma);
  s.base = read_list(in, "base");
  s.angles = read_list(in, "angles");
  for (int v = 0; v < views; ++v) s.offsets.push_back(read_list(in, "offset"));
  if (s.dim() != dim || s.views() != views) throw FormatError("scene record: size mismatch");
  return s;
}

}  // namespace mvz
