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
#include <string>

#include "mvzigal/objectives.hpp"

namespace mvz {

enum class TauMode { kSelfPaced, kFixed };
enum class AlphaMode { kAdaptive, kFixed };
// kAlgorithm gates on the freshly updated threshold and takes the step
// magnitude from the previous one; kEquation uses the updated threshold for
// both.
enum class TauIndexing { kAlgorithm, kEquation };

struct ControllerConfig {
  double alpha_plus = 0.1;    // step when the constraint is violated
  double alpha_minus = 0.01;  // step when it is satisfied
  double beta_tau = 0.99;
  double lambda_init = 0.0;
  double lambda_max = 5.0;
  TauMode tau_mode = TauMode::kSelfPaced;
  double tau_fixed = 0.0;
  AlphaMode alpha_mode = AlphaMode::kAdaptive;
  double alpha_fixed = 0.1;
  TauIndexing tau_indexing = TauIndexing::kAlgorithm;

  void validate() const;
};

/// Dual state. lambda stays inside [0, lambda_max].
struct ConstraintState {
  double lambda = 0.0;
  double tau = 0.0;
  bool initialized = false;

  friend bool operator==(const ConstraintState&, const ConstraintState&) = default;
};

ConstraintState initial_constraint_state(const ControllerConfig& config);

/// (1 / 2B) sum_i (R_mv^{i,s} + R_mv^{i,z}) over normalized joint rewards.
double batch_avg_joint_reward(std::span<const TrajectoryPair> pairs);

/// EMA threshold update; the first call adopts r_bar. Returns the new tau.
double update_tau(ConstraintState& state, double r_bar, const ControllerConfig& config);

/// lambda <- clamp(lambda + alpha * (tau_for_magnitude - r_bar), 0, lambda_max),
/// alpha chosen by whether r_bar < tau_for_gate. Returns the new lambda.
double update_lambda(ConstraintState& state, double r_bar, double tau_for_gate,
                     double tau_for_magnitude, const ControllerConfig& config);

struct ControllerStep {
  double r_bar = 0.0;
  double tau = 0.0;
  double lambda = 0.0;
  bool violated = false;
};

/// One epoch of dual updates: tau first, then lambda.
ControllerStep controller_step(ConstraintState& state, double r_bar,
                               const ControllerConfig& config);

std::string tau_mode_name(TauMode mode);
std::string alpha_mode_name(AlphaMode mode);
std::string tau_indexing_name(TauIndexing indexing);

}  // namespace mvz
