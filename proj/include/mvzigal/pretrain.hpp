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
#include <vector>

#include "mvzigal/denoiser.hpp"
#include "mvzigal/objectives.hpp"
#include "mvzigal/rng.hpp"
#include "mvzigal/scene.hpp"
#include "mvzigal/schedule.hpp"

namespace mvz {

struct PretrainConfig {
  int steps = 3000;
  int batch = 32;         // multiview samples per step
  double lr = 1e-3;
  double dropout = 0.1;   // probability of dropping prompt + view conditioning
  std::uint64_t seed = 42;
};

/// Noised multiview samples with their noise targets, split into the rows
/// that keep conditioning and the rows that drop it.
struct DenoisingBatch {
  struct Part {
    DenseArray latents;
    DenseArray context;
    DenseArray noise;
    std::vector<int> timesteps;
    std::vector<int> prompts;
    std::vector<int> views;
    bool empty() const { return timesteps.empty(); }
  };
  Part conditional;
  Part unconditional;
};

/// Draws `samples` (scene, t, noise) triples. Clean targets are the
/// consistent projections target_view(scene, v) of every view.
DenoisingBatch make_denoising_batch(const std::vector<SceneSpec>& scenes,
                                    const NoiseSchedule& schedule, const ModelSpec& spec,
                                    int samples, double dropout, Rng& rng);

/// Mean squared noise-prediction error and its gradient.
LossResult denoising_loss(const DenoiserParams& params, const DenoisingBatch& batch);

/// AdamW on the denoising loss. Appends one loss value per step to
/// `losses` when given.
DenoiserParams pretrain(const std::vector<SceneSpec>& scenes, const NoiseSchedule& schedule,
                        const PretrainConfig& config, DenoiserParams params,
                        std::vector<double>* losses = nullptr);

}  // namespace mvz
