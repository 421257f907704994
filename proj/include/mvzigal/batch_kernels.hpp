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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mvzigal/objectives.hpp"
#include "mvzigal/scene.hpp"
#include "mvzigal/zigzag.hpp"

namespace mvz {

enum class PairKind {
  kSingle,        // one standard trajectory; `second` stays empty
  kStandardPair,  // two standard draws
  kZigzagPair,    // standard draw + zigzag draw
};

// Equal seeds make a zigzag pair share its noise with the standard member.
struct PairRequest {
  int prompt = 0;
  std::uint64_t seed_first = 0;
  std::uint64_t seed_second = 0;
};

struct SamplingContext {
  const DenoiserParams* params = nullptr;
  const NoiseSchedule* schedule = nullptr;
  const std::vector<SceneSpec>* scenes = nullptr;
  GuidanceConfig guidance;
  ZigzagSchedule zigzag;
  PairKind kind = PairKind::kZigzagPair;
};

/// Samples and scores (raw rewards) one pair per request. The OpenMP and
/// serial versions return identical results.
std::vector<TrajectoryPair> sample_pairs(const SamplingContext& ctx,
                                         std::span<const PairRequest> requests);
std::vector<TrajectoryPair> sample_pairs_serial(const SamplingContext& ctx,
                                                std::span<const PairRequest> requests);

/// Log-probability tables of many trajectories under one parameter set.
std::vector<LogProbTable> log_prob_tables(const DenoiserParams& params,
                                          const NoiseSchedule& schedule,
                                          std::span<const MultiviewTrajectory* const> trajs);
std::vector<LogProbTable> log_prob_tables_serial(const DenoiserParams& params,
                                                 const NoiseSchedule& schedule,
                                                 std::span<const MultiviewTrajectory* const> trajs);

/// Per-item loss; nullopt skips the item.
using ItemLoss = std::function<std::optional<LossResult>(std::size_t)>;

struct AveragedLoss {
  LossResult mean;         // mean value and mean gradient over used items
  std::size_t used = 0;
};

/// Evaluates items in parallel and reduces them in index order, so the
/// result is bitwise independent of thread count. Throws NumericError for the
/// first item (by index) with a non-finite loss or gradient; other
/// exceptions from items are rethrown in index order as well.
AveragedLoss average_losses(std::size_t count, const ItemLoss& item);
AveragedLoss average_losses_serial(std::size_t count, const ItemLoss& item);

}  // namespace mvz
