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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mvzigal/dense_array.hpp"
#include "mvzigal/trajectory.hpp"

namespace mvz {

/// Planted scene behind one prompt. View v (0-based) sits at angle
/// 2*pi*v/V; its distractor offset pulls the single-view optimum away from
/// the consistent projection of `base`.
struct SceneSpec {
  int prompt = 0;
  std::uint64_t seed = 0;
  double gamma = 0.5;
  std::vector<double> base;                  // y in R^d
  std::vector<double> angles;                // one per view
  std::vector<std::vector<double>> offsets;  // delta_v, norm gamma

  int views() const { return static_cast<int>(angles.size()); }
  int dim() const { return static_cast<int>(base.size()); }

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

SceneSpec make_scene(int prompt, int views, std::uint64_t seed, int dim = 2, double gamma = 0.5);

/// One scene per prompt id 0..prompts-1.
std::vector<SceneSpec> make_scene_bank(int prompts, int views, std::uint64_t seed, int dim,
                                       double gamma);

// Rotation by `angle` in the first two coordinates.
std::vector<double> rotate(std::span<const double> point, double angle);

// Rot(theta_v) y.
std::vector<double> target_view(const SceneSpec& scene, int view);

// -||x0_v - (target_v + delta_v)||^2
double single_view_reward(std::span<const double> x0_view, const SceneSpec& scene, int view);

// -(1/V) sum_v ||u_v - mean(u)||^2 with u_v = Rot(-theta_v) x0_v.
double joint_view_reward(const DenseArray& x0, const SceneSpec& scene);

/// Analytic optimum of sum_v R_v + lambda * R_mv over view-frame points u_v.
struct ConstrainedOptimum {
  double sum_single = 0.0;
  double joint = 0.0;
  DenseArray points;   // u_v in view frame, [V, d]
  DenseArray samples;  // x0_v = Rot(theta_v) u_v, [V, d]
};

ConstrainedOptimum constrained_optimum_oracle(const SceneSpec& scene, double lambda);

/// Raw and normalized rewards of one trajectory.
struct RewardRecord {
  SamplingMode tag = SamplingMode::kStandard;
  std::vector<double> single;
  double joint = 0.0;
  std::vector<double> single_norm;
  double joint_norm = 0.0;
  bool normalized = false;

  double mean_single() const;
  double mean_single_norm() const;
};

RewardRecord score_trajectory(const MultiviewTrajectory& traj, const SceneSpec& scene);

// Text record: prompt, seed, gamma, base, angles, offsets.
void write_scene_record(std::ostream& out, const SceneSpec& scene);
SceneSpec read_scene_record(std::istream& in);

}  // namespace mvz
