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
#include <span>
#include <string>
#include <vector>

#include "mvzigal/scene.hpp"

namespace mvz {

enum class NormalizationMode { kRunning, kBatch };

/// Mean/variance of one reward channel. In running mode the statistics are
/// a bias-corrected EMA across batches, so the first batch initializes them
/// and early batches are weighted nearly evenly; in batch mode every batch
/// is normalized by its own statistics.
struct RunningStat {
  double mean = 0.0;
  double var = 0.0;
  std::uint64_t count = 0;  // batches seen

  void update(std::span<const double> batch, NormalizationMode mode, double decay);
  double normalize(double raw, double epsilon) const;

  friend bool operator==(const RunningStat&, const RunningStat&) = default;
};

struct RunningNormalizer {
  NormalizationMode mode = NormalizationMode::kRunning;
  double decay = 0.95;
  double epsilon = 1e-6;  // floor on the standard deviation
  RunningStat single;
  RunningStat joint;

  friend bool operator==(const RunningNormalizer&, const RunningNormalizer&) = default;
};

/// Updates both channels from the raw batch, then fills the normalized
/// fields. The single-view channel pools every view of every record.
void normalize_rewards(std::span<RewardRecord> records, RunningNormalizer& normalizer);

std::string normalization_mode_name(NormalizationMode mode);

}  // namespace mvz
