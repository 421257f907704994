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

#include <optional>
#include <string>

#include "mvzigal/denoiser.hpp"
#include "mvzigal/schedule.hpp"
#include "mvzigal/trainer.hpp"

namespace mvz {

inline constexpr int kCheckpointFormatVersion = 1;

/// Parameters, schedule constants and (for mid-training checkpoints) the
/// trainer state needed to resume.
struct Checkpoint {
  DenoiserParams params;
  NoiseSchedule schedule;
  std::optional<TrainerState> trainer;
  std::string config_hash;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
// Throws FormatError when the file is missing or malformed.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mvz
