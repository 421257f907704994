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

#include "mvzigal/objectives.hpp"
#include "mvzigal/zigzag.hpp"

namespace mvz::testing {

// A (standard, zigzag) pair from a small model, hand-set normalized
// rewards, and reference tables from a perturbed copy of the parameters.
struct PairFixture {
  DenoiserParams params;
  DenoiserParams reference;
  NoiseSchedule schedule;
  TrajectoryPair pair;
  LogProbTable ref_first;
  LogProbTable ref_second;
};

inline RewardRecord hand_rewards(int views, Rng& rng, SamplingMode tag) {
  RewardRecord r;
  r.tag = tag;
  for (int v = 0; v < views; ++v) {
    r.single.push_back(rng.uniform(-2.0, 0.0));
    r.single_norm.push_back(rng.uniform(-1.5, 1.5));
  }
  r.joint = rng.uniform(-2.0, 0.0);
  r.joint_norm = rng.uniform(-1.5, 1.5);
  r.normalized = true;
  return r;
}

inline PairFixture make_pair_fixture(int views, int steps, std::uint64_t seed,
                                     double perturbation = 0.05) {
  ModelSpec spec;
  spec.dim = 2;
  spec.views = views;
  spec.steps = steps;
  spec.prompts = 3;
  spec.hidden = 8;
  spec.embed_dim = 3;
  Rng rng(seed);
  PairFixture f{DenoiserParams::initialize(spec, seed), {}, build_noise_schedule(steps), {}, {}, {}};
  f.reference = f.params;
  for (auto& a : f.params.arrays) {
    for (double& x : a.storage()) x += perturbation * rng.normal();
  }
  const Denoiser ref_model(f.reference);
  const int prompt = rng.uniform_int(spec.prompts);
  f.pair.first = sample_trajectories(ref_model, f.schedule, prompt, views, spec.dim, 7.0, seed + 1);
  f.pair.second = zmv_sample(ref_model, f.schedule, prompt, views, spec.dim,
                             ZigzagSchedule::first_step(), GuidanceConfig{}, seed + 2);
  f.pair.first_rewards = hand_rewards(views, rng, SamplingMode::kStandard);
  f.pair.second_rewards = hand_rewards(views, rng, SamplingMode::kZigzag);
  f.ref_first = trajectory_log_probs(f.reference, f.schedule, f.pair.first);
  f.ref_second = trajectory_log_probs(f.reference, f.schedule, f.pair.second);
  return f;
}

}  // namespace mvz::testing
