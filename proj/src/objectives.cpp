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

#include "mvzigal/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvzigal/errors.hpp"

namespace mvz {

double ObjectiveConfig::log_ratio_bound() const { return -std::log(prob_floor); }

void ObjectiveConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("objective.eta must be > 0");
  if (!(beta_dpo > 0.0)) throw ConfigError("objective.beta_dpo must be > 0");
  if (!(w_mv >= 0.0)) throw ConfigError("objective.w_mv must be >= 0");
  if (!(prob_floor > 0.0 && prob_floor < 1.0)) {
    throw ConfigError("objective.prob_floor must lie in (0, 1)");
  }
}

double clip_log_ratio(double raw, double bound) { return std::clamp(raw, -bound, bound); }
double clip_log_ratio(double raw) { return clip_log_ratio(raw, -std::log(1e-4)); }

void TrajectoryPair::check_consistent() const {
  if (first.prompt != second.prompt || first.views() != second.views() ||
      first.steps() != second.steps()) {
    throw ContractError("trajectory pair members differ in prompt, views or steps");
  }
}

namespace {

void require_normalized(const TrajectoryPair& pair) {
  if (!pair.first_rewards.normalized || !pair.second_rewards.normalized) {
    throw ContractError("pair rewards have not been normalized");
  }
}

NodeId sum_nodes(Graph& graph, const std::vector<NodeId>& terms) {
  if (terms.empty()) return graph.constant(DenseArray::scalar(0.0));
  return graph.sum(graph.concat(terms));
}

LossResult collect(Graph& graph, NodeId loss, const ParamNodes& nodes) {
  LossResult out;
  out.value = graph.forward(loss).item();
  const GradientMap grads = graph.backward(loss);
  out.grads.reserve(kParamSlotCount);
  for (NodeId id : nodes) out.grads.push_back(grads.at(id));
  return out;
}

// Clamped per-step log-ratio nodes, indexed [t][v] for t in [2, T].
std::vector<std::vector<NodeId>> log_ratio_nodes(Graph& graph, const ParamNodes& nodes,
                                                 const DenoiserParams& params,
                                                 const NoiseSchedule& schedule,
                                                 const RatioInput& input, double bound) {
  const MultiviewTrajectory& traj = *input.traj;
  const LogProbTable& ref = *input.reference;
  if (static_cast<int>(ref.size()) != traj.steps() + 1) {
    throw ContractError("reference log-prob table does not match trajectory length");
  }
  std::vector<std::vector<NodeId>> out(static_cast<std::size_t>(traj.steps() + 1));
  for (int t = 2; t <= traj.steps(); ++t) {
    for (int v = 0; v < traj.views(); ++v) {
      const NodeId lp = step_log_prob_node(graph, nodes, params.spec, schedule, traj, t, v);
      const double ref_lp = ref[static_cast<std::size_t>(t)].at(static_cast<std::size_t>(v));
      const NodeId ratio = graph.sub(lp, graph.constant(DenseArray::scalar(ref_lp)));
      out[static_cast<std::size_t>(t)].push_back(graph.clamp(ratio, -bound, bound));
    }
  }
  return out;
}

}  // namespace

double zigzag_advantage(const TrajectoryPair& pair) {
  require_normalized(pair);
  return pair.second_rewards.joint_norm - pair.first_rewards.joint_norm;
}

double mvc_reward(double single, double joint, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("mvc_reward needs lambda >= 0");
  return (single + lambda * joint) / (1.0 + lambda);
}

double mvc_advantage(const TrajectoryPair& pair, int view, double lambda) {
  require_normalized(pair);
  const auto v = static_cast<std::size_t>(view);
  return mvc_reward(pair.second_rewards.single_norm.at(v), pair.second_rewards.joint_norm, lambda) -
         mvc_reward(pair.first_rewards.single_norm.at(v), pair.first_rewards.joint_norm, lambda);
}

std::vector<double> mvc_advantages(const TrajectoryPair& pair, double lambda) {
  std::vector<double> out;
  for (int v = 0; v < pair.views(); ++v) out.push_back(mvc_advantage(pair, v, lambda));
  return out;
}

double ws_reward(double single, double joint, double w_mv) {
  if (!(w_mv >= 0.0)) throw DomainError("ws_reward needs w_mv >= 0");
  return single + w_mv * joint;
}

std::vector<double> ws_advantages(const TrajectoryPair& pair, double w_mv) {
  require_normalized(pair);
  std::vector<double> out;
  for (int v = 0; v < pair.views(); ++v) {
    const auto i = static_cast<std::size_t>(v);
    out.push_back(ws_reward(pair.second_rewards.single_norm.at(i), pair.second_rewards.joint_norm,
                            w_mv) -
                  ws_reward(pair.first_rewards.single_norm.at(i), pair.first_rewards.joint_norm,
                            w_mv));
  }
  return out;
}

WeightedTrajectory joint_weighted(const MultiviewTrajectory& traj, double joint_reward) {
  return {&traj, std::vector<double>(static_cast<std::size_t>(traj.views()), joint_reward)};
}

LossResult mv_pg_loss(std::span<const WeightedTrajectory> batch, const DenoiserParams& params,
                      const NoiseSchedule& schedule) {
  if (batch.empty()) throw ContractError("mv_pg_loss on an empty batch");
  Graph graph;
  const ParamNodes nodes = bind_parameters(graph, params);
  std::vector<NodeId> terms;
  for (const WeightedTrajectory& item : batch) {
    const MultiviewTrajectory& traj = *item.traj;
    if (static_cast<int>(item.view_rewards.size()) != traj.views()) {
      throw ContractError("mv_pg_loss: one reward weight per view required");
    }
    for (int t = 2; t <= traj.steps(); ++t) {
      for (int v = 0; v < traj.views(); ++v) {
        const NodeId lp = step_log_prob_node(graph, nodes, params.spec, schedule, traj, t, v);
        terms.push_back(graph.scale(lp, -item.view_rewards[static_cast<std::size_t>(v)]));
      }
    }
  }
  const NodeId loss =
      graph.scale(sum_nodes(graph, terms), 1.0 / static_cast<double>(batch.size()));
  return collect(graph, loss, nodes);
}

LossResult mv_dpo_loss(const TrajectoryPair& pair, const LogProbTable& ref_first,
                       const LogProbTable& ref_second, const DenoiserParams& params,
                       const NoiseSchedule& schedule, const ObjectiveConfig& config) {
  pair.check_consistent();
  const double r_first = pair.first_rewards.joint;
  const double r_second = pair.second_rewards.joint;
  if (r_first == r_second) throw ContractError("mv_dpo_loss: pair is unranked (tied rewards)");
  const bool first_wins = r_first > r_second;
  const RatioInput first{&pair.first, &ref_first};
  const RatioInput second{&pair.second, &ref_second};
  const RatioInput& winner = first_wins ? first : second;
  const RatioInput& loser = first_wins ? second : first;

  Graph graph;
  const ParamNodes nodes = bind_parameters(graph, params);
  const double bound = config.log_ratio_bound();
  const auto win = log_ratio_nodes(graph, nodes, params, schedule, winner, bound);
  const auto lose = log_ratio_nodes(graph, nodes, params, schedule, loser, bound);
  std::vector<NodeId> terms;
  for (std::size_t t = 2; t < win.size(); ++t) {
    for (std::size_t v = 0; v < win[t].size(); ++v) terms.push_back(graph.sub(lose[t][v], win[t][v]));
  }
  const NodeId loss = graph.softplus(graph.scale(sum_nodes(graph, terms), config.beta_dpo));
  return collect(graph, loss, nodes);
}

LossResult log_ratio_regression_loss(const RatioInput& a, const RatioInput& b,
                                     std::span<const double> view_targets,
                                     const DenoiserParams& params, const NoiseSchedule& schedule,
                                     const ObjectiveConfig& config) {
  if (a.traj->views() != b.traj->views() || a.traj->steps() != b.traj->steps()) {
    throw ContractError("log-ratio regression needs members with equal V and T");
  }
  if (static_cast<int>(view_targets.size()) != a.traj->views()) {
    throw ContractError("log-ratio regression needs one target per view");
  }
  Graph graph;
  const ParamNodes nodes = bind_parameters(graph, params);
  const double bound = config.log_ratio_bound();
  const auto ra = log_ratio_nodes(graph, nodes, params, schedule, a, bound);
  const auto rb = log_ratio_nodes(graph, nodes, params, schedule, b, bound);
  std::vector<NodeId> terms;
  for (std::size_t t = 2; t < ra.size(); ++t) {
    for (std::size_t v = 0; v < ra[t].size(); ++v) {
      const NodeId gap = graph.scale(graph.sub(ra[t][v], rb[t][v]), 1.0 / config.eta);
      const NodeId target = graph.constant(DenseArray::scalar(view_targets[v]));
      terms.push_back(graph.squared_error(gap, target));
    }
  }
  return collect(graph, sum_nodes(graph, terms), nodes);
}

LossResult pooled_log_ratio_loss(const RatioInput& a, const RatioInput& b, double target,
                                 const DenoiserParams& params, const NoiseSchedule& schedule,
                                 const ObjectiveConfig& config) {
  if (a.traj->views() != b.traj->views() || a.traj->steps() != b.traj->steps()) {
    throw ContractError("log-ratio regression needs members with equal V and T");
  }
  Graph graph;
  const ParamNodes nodes = bind_parameters(graph, params);
  const double bound = config.log_ratio_bound();
  const auto ra = log_ratio_nodes(graph, nodes, params, schedule, a, bound);
  const auto rb = log_ratio_nodes(graph, nodes, params, schedule, b, bound);
  std::vector<NodeId> gaps;
  for (std::size_t t = 2; t < ra.size(); ++t) {
    for (std::size_t v = 0; v < ra[t].size(); ++v) gaps.push_back(graph.sub(ra[t][v], rb[t][v]));
  }
  const NodeId gap = graph.scale(sum_nodes(graph, gaps), 1.0 / config.eta);
  const NodeId loss = graph.squared_error(gap, graph.constant(DenseArray::scalar(target)));
  return collect(graph, loss, nodes);
}

LossResult mv_rdl_loss(const TrajectoryPair& pair, const LogProbTable& ref_first,
                       const LogProbTable& ref_second, const DenoiserParams& params,
                       const NoiseSchedule& schedule, const ObjectiveConfig& config) {
  pair.check_consistent();
  require_normalized(pair);
  const double diff = pair.first_rewards.joint_norm - pair.second_rewards.joint_norm;
  return pooled_log_ratio_loss({&pair.first, &ref_first}, {&pair.second, &ref_second}, diff,
                               params, schedule, config);
}

LossResult mv_zigal_loss(const TrajectoryPair& pair, const LogProbTable& ref_first,
                         const LogProbTable& ref_second, const DenoiserParams& params,
                         const NoiseSchedule& schedule, const ObjectiveConfig& config) {
  pair.check_consistent();
  return pooled_log_ratio_loss({&pair.second, &ref_second}, {&pair.first, &ref_first},
                               zigzag_advantage(pair), params, schedule, config);
}

LossResult mvc_zigal_loss(const TrajectoryPair& pair, std::span<const double> view_advantages,
                          const LogProbTable& ref_first, const LogProbTable& ref_second,
                          const DenoiserParams& params, const NoiseSchedule& schedule,
                          const ObjectiveConfig& config) {
  pair.check_consistent();
  return log_ratio_regression_loss({&pair.second, &ref_second}, {&pair.first, &ref_first},
                                   view_advantages, params, schedule, config);
}

}  // namespace mvz
