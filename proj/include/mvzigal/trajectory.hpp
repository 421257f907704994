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
#include <string_view>
#include <vector>

#include "mvzigal/denoiser.hpp"
#include "mvzigal/graph.hpp"
#include "mvzigal/rng.hpp"
#include "mvzigal/schedule.hpp"

namespace mvz {

enum class SamplingMode { kStandard, kZigzag };

std::string_view sampling_mode_name(SamplingMode mode);

/// One multiview denoising chain for a prompt. Per-step vectors are indexed
/// by timestep t = 0..T; index 0 of the transition fields is unused.
///
/// Transition t maps inputs[t] to latents[t - 1] with recorded mean
/// means[t] and stddev stddevs[t]. For a standard chain inputs[t] equals
/// latents[t]; at refined (zigzag) steps inputs[t] holds the inverted
/// latent the final re-denoise started from, so likelihood replay always
/// sees a plain Gaussian chain.
struct MultiviewTrajectory {
  int prompt = 0;
  SamplingMode mode = SamplingMode::kStandard;
  std::uint64_t seed = 0;
  std::vector<DenseArray> latents;  // [V, d] each
  std::vector<DenseArray> inputs;
  std::vector<DenseArray> means;
  std::vector<double> stddevs;
  std::vector<double> omegas;
  std::vector<int> refinements;     // zigzag passes applied at step t
  int guided_predictions = 0;       // calls into the noise predictor

  int steps() const { return static_cast<int>(latents.size()) - 1; }
  int views() const { return static_cast<int>(latents.front().rows()); }
  int dim() const { return static_cast<int>(latents.front().cols()); }
  const DenseArray& final_sample() const { return latents.front(); }
};

struct StepResult {
  DenseArray next;
  DenseArray mean;
  double stddev = 0.0;
};

// mu = (x_t - noise_coef_t * eps) / sqrt(alpha_t), elementwise.
DenseArray ancestral_mean(const NoiseSchedule& schedule, const DenseArray& x_t,
                          const DenseArray& eps, int t);

/// One guided ancestral step for all views jointly: x_{t-1} = mu + sigma_t z.
/// No noise is drawn when sigma_t == 0 (the final step).
StepResult denoise_step(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                        const DenseArray& x_t, int t, int prompt, double omega, Rng& rng);

/// Draws x_T ~ N(0, I) per view and runs denoise_step for t = T..1.
MultiviewTrajectory sample_trajectories(const NoisePredictor& predictor,
                                        const NoiseSchedule& schedule, int prompt, int views,
                                        int dim, double omega, std::uint64_t seed);

/// Graph node for log p_theta(latents[t-1][v] | inputs[t], e_v, c) under the
/// bound parameters. Requires t in [2, T]; the deterministic t = 1 step has
/// no density.
NodeId step_log_prob_node(Graph& graph, const ParamNodes& nodes, const ModelSpec& spec,
                          const NoiseSchedule& schedule, const MultiviewTrajectory& traj, int t,
                          int view);

/// Per-view step log-probabilities (values only).
std::vector<double> step_log_prob(const DenoiserParams& params, const NoiseSchedule& schedule,
                                  const MultiviewTrajectory& traj, int t);

/// Table [t][v] of step log-probabilities for t in [2, T]; rows 0 and 1
/// are empty.
using LogProbTable = std::vector<std::vector<double>>;
LogProbTable trajectory_log_probs(const DenoiserParams& params, const NoiseSchedule& schedule,
                                  const MultiviewTrajectory& traj);

/// Same table computed from the recorded (mean, stddev) of each transition.
LogProbTable recorded_log_probs(const MultiviewTrajectory& traj);

}  // namespace mvz
