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

#include "mvzigal/batch_kernels.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "mvzigal/errors.hpp"

namespace mvz {

namespace {

TrajectoryPair sample_one(const SamplingContext& ctx, const PairRequest& req) {
  const Denoiser model(*ctx.params);
  const ModelSpec& spec = ctx.params->spec;
  const SceneSpec& scene = ctx.scenes->at(static_cast<std::size_t>(req.prompt));
  TrajectoryPair pair;
  pair.first = sample_trajectories(model, *ctx.schedule, req.prompt, spec.views, spec.dim,
                                   ctx.guidance.omega_high, req.seed_first);
  pair.first_rewards = score_trajectory(pair.first, scene);
  if (ctx.kind == PairKind::kSingle) return pair;
  if (ctx.kind == PairKind::kZigzagPair) {
    pair.second = zmv_sample(model, *ctx.schedule, req.prompt, spec.views, spec.dim, ctx.zigzag,
                             ctx.guidance, req.seed_second);
  } else {
    pair.second = sample_trajectories(model, *ctx.schedule, req.prompt, spec.views, spec.dim,
                                      ctx.guidance.omega_high, req.seed_second);
  }
  pair.second_rewards = score_trajectory(pair.second, scene);
  return pair;
}

bool finite_result(const LossResult& r) {
  if (!std::isfinite(r.value)) return false;
  for (const DenseArray& g : r.grads) {
    if (!g.all_finite()) return false;
  }
  return true;
}

AveragedLoss reduce(std::vector<std::optional<LossResult>>& results) {
  AveragedLoss out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) continue;
    LossResult& r = *results[i];
    if (!finite_result(r)) {
      throw NumericError("non-finite loss or gradient at item " + std::to_string(i));
    }
    if (out.used == 0) {
      out.mean = std::move(r);
    } else {
      out.mean.value += r.value;
      for (std::size_t s = 0; s < r.grads.size(); ++s) {
        auto dst = out.mean.grads[s].data();
        auto src = r.grads[s].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
    ++out.used;
  }
  if (out.used > 1) {
    const double inv = 1.0 / static_cast<double>(out.used);
    out.mean.value *= inv;
    for (DenseArray& g : out.mean.grads) {
      for (double& x : g.data()) x *= inv;
    }
  }
  return out;
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<TrajectoryPair> sample_pairs(const SamplingContext& ctx,
                                         std::span<const PairRequest> requests) {
  const auto n = static_cast<std::ptrdiff_t>(requests.size());
  std::vector<TrajectoryPair> out(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = sample_one(ctx, requests[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

std::vector<TrajectoryPair> sample_pairs_serial(const SamplingContext& ctx,
                                                std::span<const PairRequest> requests) {
  std::vector<TrajectoryPair> out;
  out.reserve(requests.size());
  for (const PairRequest& req : requests) out.push_back(sample_one(ctx, req));
  return out;
}

std::vector<LogProbTable> log_prob_tables(const DenoiserParams& params,
                                          const NoiseSchedule& schedule,
                                          std::span<const MultiviewTrajectory* const> trajs) {
  const auto n = static_cast<std::ptrdiff_t>(trajs.size());
  std::vector<LogProbTable> out(trajs.size());
  std::vector<std::exception_ptr> errors(trajs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = trajectory_log_probs(params, schedule, *trajs[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

std::vector<LogProbTable> log_prob_tables_serial(const DenoiserParams& params,
                                                 const NoiseSchedule& schedule,
                                                 std::span<const MultiviewTrajectory* const> trajs) {
  std::vector<LogProbTable> out;
  out.reserve(trajs.size());
  for (const MultiviewTrajectory* traj : trajs) {
    out.push_back(trajectory_log_probs(params, schedule, *traj));
  }
  return out;
}

AveragedLoss average_losses(std::size_t count, const ItemLoss& item) {
  std::vector<std::optional<LossResult>> results(count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      results[k] = item(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return reduce(results);
}

AveragedLoss average_losses_serial(std::size_t count, const ItemLoss& item) {
  std::vector<std::optional<LossResult>> results;
  results.reserve(count);
  for (std::size_t i = 0; i < count; ++i) results.push_back(item(i));
  return reduce(results);
}

}  // namespace mvz
