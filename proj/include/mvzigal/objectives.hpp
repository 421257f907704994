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

#include <span>
#include <vector>

#include "mvzigal/denoiser.hpp"
#include "mvzigal/scene.hpp"
#include "mvzigal/trajectory.hpp"

namespace mvz {

struct ObjectiveConfig {
  double eta = 1.0;        // log-ratio scaling
  double beta_dpo = 1.0;
  double w_mv = 0.5;       // weighted-sum baseline coefficient
  double prob_floor = 1e-4;

  // Per-step log-ratios are clamped to [-bound, bound], bound = -ln(floor).
  double log_ratio_bound() const;
  void validate() const;
};

double clip_log_ratio(double raw, double bound);
double clip_log_ratio(double raw);

/// Two trajectories for one prompt with their reward records. `first` is the
/// standard member (s, or a for two standard draws); `second` is the zigzag
/// member (z) or the second standard draw (b).
struct TrajectoryPair {
  MultiviewTrajectory first;
  MultiviewTrajectory second;
  RewardRecord first_rewards;
  RewardRecord second_rewards;

  int prompt() const { return first.prompt; }
  int views() const { return first.views(); }
  void check_consistent() const;
};

/// A_mv = R_mv(z) - R_mv(s) on normalized joint rewards.
double zigzag_advantage(const TrajectoryPair& pair);

double mvc_reward(double single, double joint, double lambda);
double mvc_advantage(const TrajectoryPair& pair, int view, double lambda);
std::vector<double> mvc_advantages(const TrajectoryPair& pair, double lambda);

double ws_reward(double single, double joint, double w_mv);
std::vector<double> ws_advantages(const TrajectoryPair& pair, double w_mv);

/// Loss value and its gradient for every parameter array (ParamSlot order).
struct LossResult {
  double value = 0.0;
  std::vector<DenseArray> grads;
};

/// A trajectory with one reward weight per view for the likelihood-weighted
/// estimator.
struct WeightedTrajectory {
  const MultiviewTrajectory* traj = nullptr;
  std::vector<double> view_rewards;
};

// Every view weighted by the same joint reward.
WeightedTrajectory joint_weighted(const MultiviewTrajectory& traj, double joint_reward);

/// mean over batch of -sum_v w_v sum_{t>=2} log p_theta(x_{t-1}^v | x_t, e_v, c).
LossResult mv_pg_loss(std::span<const WeightedTrajectory> batch, const DenoiserParams& params,
                      const NoiseSchedule& schedule);

/// Log-likelihood ratios under the current parameters against a frozen
/// reference table for the same trajectory.
struct RatioInput {
  const MultiviewTrajectory* traj = nullptr;
  const LogProbTable* reference = nullptr;
};

/// softplus(beta * sum_{t,v} [ratio(loser) - ratio(winner)]), winner being
/// the member with the higher raw joint reward. Throws ContractError on ties.
LossResult mv_dpo_loss(const TrajectoryPair& pair, const LogProbTable& ref_first,
                       const LogProbTable& ref_second, const DenoiserParams& params,
                       const NoiseSchedule& schedule, const ObjectiveConfig& config);

/// sum_{t,v} ((1/eta)(ratio_a - ratio_b) - target_v)^2, one residual per
/// step and view.
LossResult log_ratio_regression_loss(const RatioInput& a, const RatioInput& b,
                                     std::span<const double> view_targets,
                                     const DenoiserParams& params, const NoiseSchedule& schedule,
                                     const ObjectiveConfig& config);

/// ((1/eta) sum_{t,v} (ratio_a - ratio_b) - target)^2, one pooled residual.
LossResult pooled_log_ratio_loss(const RatioInput& a, const RatioInput& b, double target,
                                 const DenoiserParams& params, const NoiseSchedule& schedule,
                                 const ObjectiveConfig& config);

// Target: normalized R_mv(first) - R_mv(second).
LossResult mv_rdl_loss(const TrajectoryPair& pair, const LogProbTable& ref_first,
                       const LogProbTable& ref_second, const DenoiserParams& params,
                       const NoiseSchedule& schedule, const ObjectiveConfig& config);

// Target: zigzag_advantage(pair).
LossResult mv_zigal_loss(const TrajectoryPair& pair, const LogProbTable& ref_first,
                         const LogProbTable& ref_second, const DenoiserParams& params,
                         const NoiseSchedule& schedule, const ObjectiveConfig& config);

// Target: per-view advantages (mvc, single-view or weighted-sum).
LossResult mvc_zigal_loss(const TrajectoryPair& pair, std::span<const double> view_advantages,
                          const LogProbTable& ref_first, const LogProbTable& ref_second,
                          const DenoiserParams& params, const NoiseSchedule& schedule,
                          const ObjectiveConfig& config);

}  // namespace mvz
