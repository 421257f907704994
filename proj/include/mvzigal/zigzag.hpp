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
#include <string>
#include <vector>

#include "mvzigal/trajectory.hpp"

namespace mvz {

struct GuidanceConfig {
  double omega_high = 7.0;
  double omega_low = 1.0;

  void validate() const;
};

/// Which timesteps receive a zigzag pass.
struct ZigzagSchedule {
  enum class Mode { kFirstStep, kFullStep, kExplicit };

  Mode mode = Mode::kFirstStep;
  std::vector<int> steps;  // explicit mode only
  int passes = 1;

  static ZigzagSchedule first_step() { return {}; }
  static ZigzagSchedule full_step() { return {Mode::kFullStep, {}, 1}; }
  static ZigzagSchedule explicit_steps(std::vector<int> steps) {
    return {Mode::kExplicit, std::move(steps), 1};
  }

  bool applies(int t, int total_steps) const;
  int count(int total_steps) const;
  void validate(int total_steps) const;
};

std::string zigzag_mode_name(ZigzagSchedule::Mode mode);
ZigzagSchedule::Mode parse_zigzag_mode(const std::string& name);

// (x - sqrt(1 - alphabar_t) eps) / sqrt(alphabar_t)
DenseArray predicted_clean(const NoiseSchedule& schedule, const DenseArray& x,
                           const DenseArray& eps, int t);

/// Maps x_{t-1} back to timestep t with the model's own low-guidance noise
/// estimate: x~_t = sqrt(alphabar_t) f + sqrt(1 - alphabar_t) eps, where
/// f is the clean sample predicted from x_{t-1} and eps is predicted at
/// timestep t and reused for x~_t.
DenseArray approximate_inversion(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                                 const DenseArray& x_prev, int t, int prompt, double omega_low);

struct ZigzagStep {
  StepResult result;  // final re-denoise and its (mean, stddev)
  DenseArray inverted;  // latent the final re-denoise started from
  int predictions = 0;
};

/// Denoise at omega_high, invert at omega_low, re-denoise at omega_high.
/// The first denoise draws from `aux`, the final re-denoise from `rng`, so a
/// zigzag chain shares its per-step noise with the standard chain of the
/// same seed.
ZigzagStep zigzag_pass(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                       const DenseArray& x_t, int t, int prompt, const GuidanceConfig& guidance,
                       int passes, Rng& rng, Rng& aux);

/// Standard multiview sampling with zigzag passes at scheduled steps.
MultiviewTrajectory zmv_sample(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                               int prompt, int views, int dim, const ZigzagSchedule& zigzag,
                               const GuidanceConfig& guidance, std::uint64_t seed);

}  // namespace mvz
