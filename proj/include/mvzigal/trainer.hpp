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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvzigal/batch_kernels.hpp"
#include "mvzigal/config.hpp"
#include "mvzigal/controller.hpp"
#include "mvzigal/metrics.hpp"
#include "mvzigal/normalizer.hpp"
#include "mvzigal/optimizer.hpp"

namespace mvz {

/// Everything that carries over between epochs besides the parameters.
struct TrainerState {
  int epoch = 0;  // completed epochs
  ConstraintState controller;
  RunningNormalizer normalizer;
  AdamW optimizer;
};

TrainerState initial_trainer_state(const TrainConfig& config);

/// Scenes, schedule and evaluation setup derived from a config.
struct TrainingSetup {
  NoiseSchedule schedule;
  std::vector<SceneSpec> scenes;
  std::string config_hash;
};

TrainingSetup make_training_setup(const TrainConfig& config);

enum class Execution { kParallel, kSerial };

/// One outer iteration: sample pairs, normalize rewards, update the
/// controller, snapshot the parameters, then run the inner epochs on the
/// stored chains.
EpochMetrics run_epoch(DenoiserParams& params, TrainerState& state, const TrainConfig& config,
                       const TrainingSetup& setup, Execution exec = Execution::kParallel);

struct EvalReport {
  int prompts = 0;
  int seeds_per_prompt = 0;
  double standard_single = 0.0;  // mean raw single-view reward
  double standard_joint = 0.0;
  double zigzag_single = 0.0;
  double zigzag_joint = 0.0;
  double gap = 0.0;  // zigzag_joint - standard_joint

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fixed-seed standard vs zigzag generation on the first `prompts` scenes.
/// Seeds depend only on (seed, prompt, sample index).
EvalReport evaluate(const DenoiserParams& params, const NoiseSchedule& schedule,
                    const std::vector<SceneSpec>& scenes, const GuidanceConfig& guidance,
                    const ZigzagSchedule& zigzag, int prompts, int seeds_per_prompt,
                    std::uint64_t seed, Execution exec = Execution::kParallel);

EvalReport evaluate(const DenoiserParams& params, const TrainConfig& config,
                    const TrainingSetup& setup, Execution exec = Execution::kParallel);

std::string format_eval_report(const EvalReport& report);

/// Called after every epoch whose index is a multiple of
/// checkpoint_every, and after the final epoch.
using CheckpointHook = std::function<void(const DenoiserParams&, const TrainerState&)>;

struct FinetuneResult {
  DenoiserParams params;
  TrainerState state;
  std::vector<EpochMetrics> metrics;
};

/// Runs epochs state.epoch + 1 .. config.epochs. Passing the state stored
/// in a checkpoint resumes an interrupted run.
FinetuneResult finetune(const TrainConfig& config, DenoiserParams params,
                        std::optional<TrainerState> resume = std::nullopt,
                        const CheckpointHook& hook = {}, Execution exec = Execution::kParallel);

/// Builds the scene bank and schedule and pretrains fresh parameters.
DenoiserParams pretrain_from_config(const TrainConfig& config,
                                    std::vector<double>* losses = nullptr);

}  // namespace mvz
