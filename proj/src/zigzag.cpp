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

#include "mvzigal/zigzag.hpp"

#include <algorithm>
#include <cmath>

#include "mvzigal/errors.hpp"

namespace mvz {

void GuidanceConfig::validate() const {
  if (!(omega_low >= 0.0)) throw ConfigError("guidance.omega_low must be >= 0");
  if (!(omega_high >= omega_low)) throw ConfigError("guidance.omega_high must be >= omega_low");
}

bool ZigzagSchedule::applies(int t, int total_steps) const {
  switch (mode) {
    case Mode::kFirstStep: return t == total_steps;
    case Mode::kFullStep: return true;
    case Mode::kExplicit: return std::find(steps.begin(), steps.end(), t) != steps.end();
  }
  return false;
}

int ZigzagSchedule::count(int total_steps) const {
  int n = 0;
  for (int t = 1; t <= total_steps; ++t) n += applies(t, total_steps) ? 1 : 0;
  return n;
}

void ZigzagSchedule::validate(int total_steps) const {
  if (passes < 1) throw ConfigError("zigzag.passes must be >= 1");
  if (mode == Mode::kExplicit) {
    for (int t : steps) {
      if (t < 1 || t > total_steps) {
        throw ConfigError("zigzag step " + std::to_string(t) + " outside [1, " +
                          std::to_string(total_steps) + "]");
      }
    }
  }
}

std::string zigzag_mode_name(ZigzagSchedule::Mode mode) {
  switch (mode) {
    case ZigzagSchedule::Mode::kFirstStep: return "first-step";
    case ZigzagSchedule::Mode::kFullStep: return "full-step";
    case ZigzagSchedule::Mode::kExplicit: return "explicit";
  }
  return "first-step";
}

ZigzagSchedule::Mode parse_zigzag_mode(const std::string& name) {
  if (name == "first-step") return ZigzagSchedule::Mode::kFirstStep;
  if (name == "full-step") return ZigzagSchedule::Mode::kFullStep;
  if (name == "explicit") return ZigzagSchedule::Mode::kExplicit;
  throw ConfigError("unknown zigzag schedule '" + name + "'");
}

DenseArray predicted_clean(const NoiseSchedule& schedule, const DenseArray& x,
                           const DenseArray& eps, int t) {
  const double s = std::sqrt(schedule.alphabar[t]);
  const double n = std::sqrt(1.0 - schedule.alphabar[t]);
  DenseArray f(x.shape());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = (x[i] - n * eps[i]) / s;
  return f;
}

DenseArray approximate_inversion(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                                 const DenseArray& x_prev, int t, int prompt, double omega_low) {
  if (t < 1 || t > schedule.steps) {
    throw ContractError("approximate_inversion: t = " + std::to_string(t) + " outside [1, T]");
  }
  const DenseArray eps = predictor.predict(x_prev, t, prompt, omega_low);
  const DenseArray clean = predicted_clean(schedule, x_prev, eps, t - 1);
  const double s = std::sqrt(schedule.alphabar[t]);
  const double n = std::sqrt(1.0 - schedule.alphabar[t]);
  DenseArray out(x_prev.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * clean[i] + n * eps[i];
  return out;
}

ZigzagStep zigzag_pass(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                       const DenseArray& x_t, int t, int prompt, const GuidanceConfig& guidance,
                       int passes, Rng& rng, Rng& aux) {
  ZigzagStep out;
  StepResult current = denoise_step(predictor, schedule, x_t, t, prompt, guidance.omega_high, aux);
  out.predictions = 1;
  for (int p = 0; p < passes; ++p) {
    out.inverted =
        approximate_inversion(predictor, schedule, current.next, t, prompt, guidance.omega_low);
    Rng& stream = (p + 1 == passes) ? rng : aux;
    current = denoise_step(predictor, schedule, out.inverted, t, prompt, guidance.omega_high,
                           stream);
    out.predictions += 2;
  }
  out.result = std::move(current);
  return out;
}

MultiviewTrajectory zmv_sample(const NoisePredictor& predictor, const NoiseSchedule& schedule,
                               int prompt, int views, int dim, const ZigzagSchedule& zigzag,
                               const GuidanceConfig& guidance, std::uint64_t seed) {
  if (views < 1) throw ContractError("zmv_sample needs V >= 1");
  const int steps = schedule.steps;
  zigzag.validate(steps);
  Rng rng(seed);
  Rng aux(derive_seed({seed, 0x7a6967}));
  MultiviewTrajectory traj;
  traj.prompt = prompt;
  traj.mode = SamplingMode::kZigzag;
  traj.seed = seed;
  traj.latents.resize(steps + 1);
  traj.inputs.resize(steps + 1);
  traj.means.resize(steps + 1);
  traj.stddevs.assign(steps + 1, 0.0);
  traj.omegas.assign(steps + 1, guidance.omega_high);
  traj.omegas[0] = 0.0;
  traj.refinements.assign(steps + 1, 0);

  DenseArray x(Shape{static_cast<std::size_t>(views), static_cast<std::size_t>(dim)});
  for (double& v : x.storage()) v = rng.normal();
  traj.latents[steps] = x;
  for (int t = steps; t >= 1; --t) {
    StepResult step;
    if (zigzag.applies(t, steps)) {
      ZigzagStep z = zigzag_pass(predictor, schedule, traj.latents[t], t, prompt, guidance,
                                 zigzag.passes, rng, aux);
      traj.inputs[t] = std::move(z.inverted);
      traj.refinements[t] = zigzag.passes;
      traj.guided_predictions += z.predictions;
      step = std::move(z.result);
    } else {
      step = denoise_step(predictor, schedule, traj.latents[t], t, prompt, guidance.omega_high,
                          rng);
      traj.inputs[t] = traj.latents[t];
      traj.guided_predictions += 1;
    }
    traj.means[t] = std::move(step.mean);
    traj.stddevs[t] = step.stddev;
    traj.latents[t - 1] = std::move(step.next);
  }
  return traj;
}

}  // namespace mvz
