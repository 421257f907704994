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

#include "mvzigal/controller.hpp"

#include <algorithm>

#include "mvzigal/errors.hpp"

namespace mvz {

void ControllerConfig::validate() const {
  if (alpha_mode == AlphaMode::kAdaptive && !(alpha_plus >= alpha_minus && alpha_minus > 0.0)) {
    throw ConfigError("controller needs alpha_plus >= alpha_minus > 0");
  }
  if (alpha_mode == AlphaMode::kFixed && !(alpha_fixed > 0.0)) {
    throw ConfigError("controller.alpha_fixed must be > 0");
  }
  if (!(beta_tau >= 0.0 && beta_tau < 1.0)) throw ConfigError("controller.beta_tau must lie in [0, 1)");
  if (!(lambda_init >= 0.0)) throw ConfigError("controller.lambda_init must be >= 0");
  if (!(lambda_max > 0.0)) throw ConfigError("controller.lambda_max must be > 0");
  if (lambda_init > lambda_max) throw ConfigError("controller.lambda_init exceeds lambda_max");
}

ConstraintState initial_constraint_state(const ControllerConfig& config) {
  ConstraintState s;
  s.lambda = config.lambda_init;
  if (config.tau_mode == TauMode::kFixed) {
    s.tau = config.tau_fixed;
    s.initialized = true;
  }
  return s;
}

double batch_avg_joint_reward(std::span<const TrajectoryPair> pairs) {
  if (pairs.empty()) throw ContractError("batch_avg_joint_reward on an empty batch");
  double acc = 0.0;
  for (const TrajectoryPair& p : pairs) {
    if (!p.first_rewards.normalized || !p.second_rewards.normalized) {
      throw ContractError("batch_avg_joint_reward needs normalized rewards");
    }
    acc += p.first_rewards.joint_norm + p.second_rewards.joint_norm;
  }
  return acc / (2.0 * static_cast<double>(pairs.size()));
}

double update_tau(ConstraintState& state, double r_bar, const ControllerConfig& config) {
  if (config.tau_mode == TauMode::kFixed) {
    state.tau = config.tau_fixed;
  } else if (!state.initialized) {
    state.tau = r_bar;
  } else {
    state.tau = config.beta_tau * state.tau + (1.0 - config.beta_tau) * r_bar;
  }
  state.initialized = true;
  return state.tau;
}

double update_lambda(ConstraintState& state, double r_bar, double tau_for_gate,
                     double tau_for_magnitude, const ControllerConfig& config) {
  double alpha = config.alpha_fixed;
  if (config.alpha_mode == AlphaMode::kAdaptive) {
    alpha = r_bar < tau_for_gate ? config.alpha_plus : config.alpha_minus;
  }
  state.lambda =
      std::clamp(state.lambda + alpha * (tau_for_magnitude - r_bar), 0.0, config.lambda_max);
  return state.lambda;
}

ControllerStep controller_step(ConstraintState& state, double r_bar,
                               const ControllerConfig& config) {
  const bool first = !state.initialized;
  const double tau_prev = state.tau;
  const double tau = update_tau(state, r_bar, config);
  // On the first epoch there is no previous threshold; the current one
  // stands in for it.
  const double tau_magnitude =
      (config.tau_indexing == TauIndexing::kAlgorithm && !first) ? tau_prev : tau;
  ControllerStep step;
  step.r_bar = r_bar;
  step.tau = tau;
  step.violated = r_bar < tau;
  step.lambda = update_lambda(state, r_bar, tau, tau_magnitude, config);
  return step;
}

std::string tau_mode_name(TauMode mode) {
  return mode == TauMode::kSelfPaced ? "self-paced" : "fixed";
}
std::string alpha_mode_name(AlphaMode mode) {
  return mode == AlphaMode::kAdaptive ? "adaptive" : "fixed";
}
std::string tau_indexing_name(TauIndexing indexing) {
  return indexing == TauIndexing::kAlgorithm ? "algorithm" : "equation";
}

}  // namespace mvz
