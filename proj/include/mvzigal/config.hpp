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
#include <string>
#include <string_view>

#include "mvzigal/controller.hpp"
#include "mvzigal/denoiser.hpp"
#include "mvzigal/normalizer.hpp"
#include "mvzigal/objectives.hpp"
#include "mvzigal/optimizer.hpp"
#include "mvzigal/pretrain.hpp"
#include "mvzigal/zigzag.hpp"

namespace mvz {

enum class Method { kMvPg, kMvDpo, kMvRdl, kMvZigal, kZigal, kWsZigal, kMvcZigpg, kMvcZigal };

std::string method_name(Method method);
Method parse_method(std::string_view name);

// Pairs are (standard, first-step zigzag) for these methods and two
// standard draws otherwise.
bool uses_zigzag_pairs(Method method);
// mv-pg trains on single trajectories.
bool uses_pairs(Method method);
bool uses_controller(Method method);

/// Every knob of a run. Parsed from flat `section.key = value` text.
struct TrainConfig {
  Method method = Method::kMvcZigal;
  std::uint64_t seed = 0;

  ModelSpec model;
  double beta_start = 1e-2;
  double beta_end = 0.3;

  double scene_gamma = 0.5;
  std::uint64_t scene_seed = 7;

  GuidanceConfig guidance;
  ZigzagSchedule zigzag;
  PretrainConfig pretrain;

  int epochs = 50;            // K
  int inner_epochs = 1;       // N
  int batch = 8;              // B, prompts per sampled batch
  int batches_per_epoch = 10;
  int grad_accum = 1;         // sampled batches per optimizer step
  AdamConfig adam{.lr = 3e-4};
  double max_grad_norm = 5.0;
  int checkpoint_every = 0;   // 0 disables intermediate checkpoints
  bool record_wall_time = true;

  ObjectiveConfig objective;

  NormalizationMode normalize_mode = NormalizationMode::kRunning;
  double normalize_decay = 0.95;
  double normalize_epsilon = 1e-6;

  ControllerConfig controller;

  int eval_seeds = 4;   // samples per prompt per mode
  int eval_prompts = 0; // 0 means every prompt of the bank
  int eval_every = 1;   // 0 disables per-epoch gap evaluation

  void validate() const;
};

/// Parses config text. Unknown keys, duplicates, malformed values and
/// out-of-range values raise ConfigError naming the key.
TrainConfig parse_config_text(std::string_view text);
TrainConfig parse_config_file(const std::string& path);

/// Applies one `key = value` assignment to an existing config.
void apply_config_value(TrainConfig& config, std::string_view key, std::string_view value);

/// Canonical dump listing every key; parse_config_text inverts it.
std::string config_to_text(const TrainConfig& config);

// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const TrainConfig& config);

}  // namespace mvz
