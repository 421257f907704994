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

#include "mvzigal/trajectory.hpp"

#include <cmath>
#include <string>

#include "mvzigal/errors.hpp"

namespace mvz {

std::string_view sampling_mode_name(SamplingMode mode) {
  return mode == SamplingMode::kStandard ? "standard" : "zigzag";
}

DenseArray ancestral_mean(const NoiseSchedule& schedule, const DenseArray& x_t,
                          const DenseArray& eps, int t) {
  // Same operation order as the graph in step_log_prob_node, so recorded
  // means and replayed means agree bit for bit.
  const double coef = schedule.noise_coef(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha(t));
  DenseArray mu(x_t.shape());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double scaled = eps[i] * coef;
    const double diff = x_t[i] - scaled;
    mu[i] = diff * inv_sqrt_alpha;
  }
  return mu;
}

StepResult denoise_step(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                        const DenseArray& x_t, int t, int prompt, double omega, Rng& rng) {
  if (t < 1 || t > schedule.steps) {
    throw ContractError("denoise_step: t = " + std::to_string(t) + " outside [1, T]");
  }
  const DenseArray eps = predictor.predict(x_t, t, prompt, omega);
  StepResult out;
  out.mean = ancestral_mean(schedule, x_t, eps, t);
  out.stddev = schedule.sigma[t];
  out.next = out.mean;
  if (out.stddev > 0.0) {
    for (double& v : out.next.storage()) v += out.stddev * rng.normal();
  }
  return out;
}

MultiviewTrajectory sample_trajectories(const NoisePredictor& predictor,
                                        const NoiseSchedule& schedule, int prompt, int views,
                                        int dim, double omega, std::uint64_t seed) {
  if (views < 1) throw ContractError("sample_trajectories needs V >= 1");
  const int steps = schedule.steps;
  Rng rng(seed);
  MultiviewTrajectory traj;
  traj.prompt = prompt;
  traj.mode = SamplingMode::kStandard;
  traj.seed = seed;
  traj.latents.resize(steps + 1);
  traj.inputs.resize(steps + 1);
  traj.means.resize(steps + 1);
  traj.stddevs.assign(steps + 1, 0.0);
  traj.omegas.assign(steps + 1, 0.0);
  traj.refinements.assign(steps + 1, 0);

  DenseArray x(Shape{static_cast<std::size_t>(views), static_cast<std::size_t>(dim)});
  for (double& v : x.storage()) v = rng.normal();
  traj.latents[steps] = x;
  for (int t = steps; t >= 1; --t) {
    StepResult step = denoise_step(predictor, schedule, traj.latents[t], t, prompt, omega, rng);
    traj.guided_predictions += 1;
    traj.inputs[t] = traj.latents[t];
    traj.means[t] = std::move(step.mean);
    traj.stddevs[t] = step.stddev;
    traj.omegas[t] = omega;
    traj.latents[t - 1] = std::move(step.next);
  }
  return traj;
}

NodeId step_log_prob_node(Graph& graph, const ParamNodes& nodes, const ModelSpec& spec,
                          const NoiseSchedule& schedule, const MultiviewTrajectory& traj, int t,
                          int view) {
  if (t < 2 || t > traj.steps()) {
    throw ContractError("step log-probability undefined at t = " + std::to_string(t) +
                        " (valid range [2, T])");
  }
  const DenseArray& state = traj.inputs[t];
  const std::size_t d = state.cols();
  const auto v = static_cast<std::size_t>(view);
  DenseArray x_row(Shape{1, d});
  DenseArray ctx_row(Shape{1, d});
  DenseArray target(Shape{1, d});
  const DenseArray ctx = cross_view_context(state);
  for (std::size_t c = 0; c < d; ++c) {
    x_row.at(0, c) = state.at(v, c);
    ctx_row.at(0, c) = ctx.at(v, c);
    target.at(0, c) = traj.latents[t - 1].at(v, c);
  }
  const int ts[1] = {t};
  const int ps[1] = {traj.prompt};
  const int vs[1] = {view};
  const BranchInput input{&x_row, &ctx_row, ts, ps, vs};
  const NodeId eps = guided_epsilon(graph, nodes, spec, input, traj.omegas[t]);
  const NodeId x = graph.constant(x_row);
  const NodeId mu = graph.scale(graph.sub(x, graph.scale(eps, schedule.noise_coef(t))),
                                1.0 / std::sqrt(schedule.alpha(t)));
  return graph.gaussian_log_density(graph.constant(target), mu, schedule.sigma[t]);
}

std::vector<double> step_log_prob(const DenoiserParams& params, const NoiseSchedule& schedule,
                                  const MultiviewTrajectory& traj, int t) {
  std::vector<double> out(static_cast<std::size_t>(traj.views()));
  for (int v = 0; v < traj.views(); ++v) {
    Graph graph;
    const ParamNodes nodes = bind_constants(graph, params);
    const NodeId lp = step_log_prob_node(graph, nodes, params.spec, schedule, traj, t, v);
    out[static_cast<std::size_t>(v)] = graph.forward(lp).item();
  }
  return out;
}

LogProbTable trajectory_log_probs(const DenoiserParams& params, const NoiseSchedule& schedule,
                                  const MultiviewTrajectory& traj) {
  LogProbTable table(static_cast<std::size_t>(traj.steps() + 1));
  for (int t = 2; t <= traj.steps(); ++t) {
    table[static_cast<std::size_t>(t)] = step_log_prob(params, schedule, traj, t);
  }
  return table;
}

LogProbTable recorded_log_probs(const MultiviewTrajectory& traj) {
  LogProbTable table(static_cast<std::size_t>(traj.steps() + 1));
  const std::size_t d = static_cast<std::size_t>(traj.dim());
  for (int t = 2; t <= traj.steps(); ++t) {
    auto& row = table[static_cast<std::size_t>(t)];
    for (int v = 0; v < traj.views(); ++v) {
      DenseArray x(Shape{d});
      DenseArray mu(Shape{d});
      for (std::size_t c = 0; c < d; ++c) {
        x[c] = traj.latents[t - 1].at(static_cast<std::size_t>(v), c);
        mu[c] = traj.means[t].at(static_cast<std::size_t>(v), c);
      }
      row.push_back(gaussian_log_density(x, mu, traj.stddevs[t]));
    }
  }
  return table;
}

}  // namespace mvz
