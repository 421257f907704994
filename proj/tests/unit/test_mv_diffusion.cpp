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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "mvzigal/checkpoint.hpp"
#include "mvzigal/errors.hpp"
#include "mvzigal/pretrain.hpp"
#include "mvzigal/trajectory.hpp"
#include "support.hpp"

using namespace mvz;
using mvz::testing::random_array;

namespace {

ModelSpec small_spec(int views = 3, int steps = 4) {
  ModelSpec s;
  s.views = views;
  s.steps = steps;
  s.prompts = 5;
  s.hidden = 16;
  return s;
}

double beta_oracle(int t, int steps) {
  return 1e-2 + (0.3 - 1e-2) * static_cast<double>(t - 1) / static_cast<double>(steps - 1);
}

// Single-transition trajectory whose stored step t is (x -> x_prev).
MultiviewTrajectory one_step(const DenseArray& x, const DenseArray& x_prev, int t, int steps,
                             int prompt, double omega) {
  MultiviewTrajectory traj;
  traj.prompt = prompt;
  traj.latents.assign(steps + 1, x);
  traj.inputs.assign(steps + 1, x);
  traj.means.assign(steps + 1, x);
  traj.stddevs.assign(steps + 1, 0.0);
  traj.omegas.assign(steps + 1, omega);
  traj.refinements.assign(steps + 1, 0);
  traj.latents[t - 1] = x_prev;
  return traj;
}

}  // namespace

TEST_CASE("noise schedule: monotone, T=2 product, cumulative-product oracle") {
  const NoiseSchedule s8 = build_noise_schedule(8);
  for (int t = 1; t <= 8; ++t) CHECK(s8.alphabar[t] < s8.alphabar[t - 1]);
  CHECK(s8.alphabar[8] < s8.alphabar[1]);
  CHECK(s8.alphabar[1] < 1.0);
  CHECK(s8.alphabar[0] == 1.0);

  const NoiseSchedule s2 = build_noise_schedule(2);
  CHECK(s2.alphabar[1] == 1.0 - s2.beta[1]);

  double prod = 1.0;
  for (int t = 1; t <= 8; ++t) {
    const double beta = beta_oracle(t, 8);
    CHECK(std::abs(s8.beta[t] - beta) <= 1e-15);
    prod *= 1.0 - beta;
    CHECK(std::abs(s8.alphabar[t] - prod) <= 1e-12);
    CHECK(s8.beta[t] > 0.0);
    CHECK(s8.beta[t] < 1.0);
  }
  CHECK_THROWS_AS(build_noise_schedule(1), ConfigError);
}

TEST_CASE("noise schedule: posterior stddevs") {
  const NoiseSchedule s = build_noise_schedule(6);
  CHECK(s.sigma[1] == 0.0);
  for (int t = 2; t <= 6; ++t) {
    const double var = s.beta[t] * (1.0 - s.alphabar[t - 1]) / (1.0 - s.alphabar[t]);
    CHECK(s.sigma[t] > 0.0);
    CHECK(std::abs(s.sigma[t] - std::sqrt(var)) <= 1e-15);
  }
}

TEST_CASE("model spec limits") {
  ModelSpec s;
  s.steps = 17;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.steps = 4;
  s.views = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("guidance identities and linearity in omega") {
  const ModelSpec spec = small_spec();
  const DenoiserParams params = DenoiserParams::initialize(spec, 4);
  const Denoiser model(params);
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseArray x = random_array({3, 2}, rng);
    const int t = 1 + trial % spec.steps;
    const int prompt = trial % spec.prompts;
    const DenseArray cond = model.predict_branch(x, t, prompt, true);
    const DenseArray uncond = model.predict_branch(x, t, prompt, false);
    CHECK(model.predict(x, t, prompt, 1.0) == cond);
    CHECK(model.predict(x, t, prompt, 0.0) == uncond);
    const DenseArray g7 = model.predict(x, t, prompt, 7.0);
    for (std::size_t i = 0; i < g7.size(); ++i) {
      const double two_pass = uncond[i] + 7.0 * (cond[i] - uncond[i]);
      CHECK(std::abs(g7[i] - two_pass) <= 1e-12 * std::max(1.0, std::abs(two_pass)));
    }
    const double omega = rng.uniform(0.0, 9.0);
    const DenseArray at = model.predict(x, t, prompt, omega);
    const DenseArray e0 = model.predict(x, t, prompt, 0.0);
    const DenseArray e1 = model.predict(x, t, prompt, 1.0);
    for (std::size_t i = 0; i < at.size(); ++i) {
      CHECK(at[i] == (1.0 - omega) * e0[i] + omega * e1[i]);
    }
  }
}

TEST_CASE("unknown prompt or view ids are lookup errors") {
  const ModelSpec spec = small_spec();
  const DenoiserParams params = DenoiserParams::initialize(spec, 1);
  const Denoiser model(params);
  const DenseArray x(Shape{3, 2}, 0.1);
  CHECK_THROWS_AS(model.predict(x, 2, spec.prompts, 7.0), LookupError);
  CHECK_THROWS_AS(model.predict(x, 2, -1, 7.0), LookupError);
  const DenseArray too_many(Shape{4, 2}, 0.1);
  CHECK_THROWS_AS(model.predict(too_many, 2, 0, 7.0), LookupError);
}

TEST_CASE("unconditional branch ignores prompt and view embeddings") {
  const ModelSpec spec = small_spec();
  const DenoiserParams params = DenoiserParams::initialize(spec, 2);
  const Denoiser model(params);
  Rng rng(1);
  const DenseArray x = random_array({3, 2}, rng);
  CHECK(model.predict_branch(x, 3, 0, false) == model.predict_branch(x, 3, 4, false));
  CHECK_FALSE(model.predict_branch(x, 3, 0, true) == model.predict_branch(x, 3, 4, true));
}

TEST_CASE("view permutation equivariance") {
  const ModelSpec spec = small_spec(4);
  DenoiserParams params = DenoiserParams::initialize(spec, 6);
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  DenoiserParams permuted = params;
  DenseArray& table = permuted[kViewEmbed];  // [embed_dim, views]
  const DenseArray& orig = params[kViewEmbed];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t v = 0; v < 4; ++v) table.at(r, v) = orig.at(r, perm[v]);
  }
  Rng rng(3);
  const DenseArray x = random_array({4, 2}, rng);
  DenseArray xp(Shape{4, 2});
  for (std::size_t v = 0; v < 4; ++v) {
    for (std::size_t c = 0; c < 2; ++c) xp.at(v, c) = x.at(perm[v], c);
  }
  const DenseArray out = Denoiser(params).predict(x, 2, 1, 7.0);
  const DenseArray outp = Denoiser(permuted).predict(xp, 2, 1, 7.0);
  for (std::size_t v = 0; v < 4; ++v) {
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(std::abs(outp.at(v, c) - out.at(perm[v], c)) <= 1e-12);
    }
  }
}

TEST_CASE("denoise step: deterministic final step, reproducible noise, recorded density") {
  const ModelSpec spec = small_spec();
  const DenoiserParams params = DenoiserParams::initialize(spec, 5);
  const Denoiser model(params);
  const NoiseSchedule schedule = build_noise_schedule(spec.steps);
  Rng data(12);
  const DenseArray x = random_array({3, 2}, data);

  Rng r1(77);
  const StepResult last = denoise_step(model, schedule, x, 1, 0, 7.0, r1);
  CHECK(last.stddev == 0.0);
  CHECK(last.next == last.mean);

  Rng a(5), b(5);
  const StepResult sa = denoise_step(model, schedule, x, 3, 2, 7.0, a);
  const StepResult sb = denoise_step(model, schedule, x, 3, 2, 7.0, b);
  CHECK(sa.next == sb.next);
  CHECK(sa.stddev == schedule.sigma[3]);

  double sq = 0.0;
  for (std::size_t i = 0; i < sa.next.size(); ++i) {
    sq += (sa.next[i] - sa.mean[i]) * (sa.next[i] - sa.mean[i]);
  }
  const double s = sa.stddev;
  const double oracle = -sq / (2 * s * s) - 6.0 * std::log(s) -
                        3.0 * std::log(2 * std::numbers::pi);
  CHECK(std::abs(gaussian_log_density(sa.next, sa.mean, s) - oracle) <= 1e-10);
}

TEST_CASE("step log-prob at the recomputed mean") {
  const ModelSpec spec = small_spec(2);
  const DenoiserParams params = DenoiserParams::initialize(spec, 9);
  NoiseSchedule schedule = build_noise_schedule(spec.steps);
  schedule.sigma[3] = 0.5;
  Rng rng(4);
  const DenseArray x = random_array({2, 2}, rng);
  const DenseArray eps = Denoiser(params).predict(x, 3, 1, 7.0);
  const DenseArray mean = ancestral_mean(schedule, x, eps, 3);
  const MultiviewTrajectory traj = one_step(x, mean, 3, spec.steps, 1, 7.0);
  const std::vector<double> lp = step_log_prob(params, schedule, traj, 3);
  const double expected = -std::log(2 * std::numbers::pi * 0.25);
  for (double v : lp) CHECK(std::abs(v - expected) <= 1e-12);
  CHECK_THROWS_AS(step_log_prob(params, schedule, traj, 1), ContractError);
}

TEST_CASE("step log-prob gradient matches finite differences") {
  const ModelSpec spec = small_spec(2, 3);
  DenoiserParams params = DenoiserParams::initialize(spec, 21);
  const NoiseSchedule schedule = build_noise_schedule(spec.steps);
  const MultiviewTrajectory traj = sample_trajectories(Denoiser(params), schedule, 2, 2, 2, 7.0, 99);
  auto value = [&] {
    Graph g;
    const ParamNodes nodes = bind_parameters(g, params);
    return g.forward(step_log_prob_node(g, nodes, spec, schedule, traj, 3, 1)).item();
  };
  Graph g;
  const ParamNodes nodes = bind_parameters(g, params);
  const NodeId lp = step_log_prob_node(g, nodes, spec, schedule, traj, 3, 1);
  g.forward(lp);
  const GradientMap grads = g.backward(lp);
  std::vector<DenseArray> analytic;
  for (NodeId id : nodes) analytic.push_back(grads.at(id));
  const std::vector<std::pair<std::size_t, std::size_t>> picks = {
      {kHidden1Weight, 0}, {kHidden1Weight, 17}, {kHidden2Weight, 5}, {kOutWeight, 3},
      {kOutBias, 1},       {kPromptEmbed, 2},    {kViewEmbed, 1},     {kHidden1Bias, 4}};
  CHECK(mvz::testing::worst_fd_error(params.arrays, analytic, value, picks) <= 1e-4);
}

TEST_CASE("sampled trajectories: replay, determinism, single view") {
  const ModelSpec spec = small_spec(6, 8);
  const DenoiserParams params = DenoiserParams::initialize(spec, 13);
  const NoiseSchedule schedule = build_noise_schedule(spec.steps);
  const Denoiser model(params);
  const MultiviewTrajectory a = sample_trajectories(model, schedule, 3, 6, 2, 7.0, 1234);
  const MultiviewTrajectory b = sample_trajectories(model, schedule, 3, 6, 2, 7.0, 1234);
  CHECK(a.latents == b.latents);
  CHECK(a.means == b.means);
  CHECK(a.mode == SamplingMode::kStandard);
  CHECK(a.steps() == 8);
  CHECK(a.views() == 6);

  const LogProbTable replay = trajectory_log_probs(params, schedule, a);
  const LogProbTable recorded = recorded_log_probs(a);
  double sum_replay = 0.0, sum_recorded = 0.0;
  for (int t = 2; t <= 8; ++t) {
    for (int v = 0; v < 6; ++v) {
      CHECK(std::abs(replay[t][v] - recorded[t][v]) <= 1e-10);
      sum_replay += replay[t][v];
      sum_recorded += recorded[t][v];
    }
  }
  CHECK(std::isfinite(sum_replay));
  CHECK(std::abs(sum_replay - sum_recorded) <= 1e-9);

  const ModelSpec one = small_spec(1, 4);
  const DenoiserParams p1 = DenoiserParams::initialize(one, 2);
  const MultiviewTrajectory single =
      sample_trajectories(Denoiser(p1), build_noise_schedule(4), 0, 1, 2, 7.0, 5);
  CHECK(single.views() == 1);
  // With one view the context feature is the latent itself.
  const DenseArray ctx = cross_view_context(single.latents[4]);
  CHECK(ctx == single.latents[4]);
}

TEST_CASE("pretraining lowers held-out loss and improves single-view reward") {
  ModelSpec spec;
  spec.prompts = 16;
  const NoiseSchedule schedule = build_noise_schedule(spec.steps);
  const std::vector<SceneSpec> scenes = make_scene_bank(16, spec.views, 7, spec.dim, 0.5);
  const DenoiserParams init = DenoiserParams::initialize(spec, 3);
  Rng held_rng(555);
  const DenoisingBatch held = make_denoising_batch(scenes, schedule, spec, 64, 0.1, held_rng);
  PretrainConfig cfg;
  cfg.seed = 3;
  const DenoiserParams trained = pretrain(scenes, schedule, cfg, init);
  CHECK(denoising_loss(trained, held).value < denoising_loss(init, held).value);

  auto mean_single = [&](const DenoiserParams& p) {
    const Denoiser model(p);
    double total = 0.0;
    for (int prompt = 0; prompt < 16; ++prompt) {
      const MultiviewTrajectory traj =
          sample_trajectories(model, schedule, prompt, spec.views, spec.dim, 7.0,
                              derive_seed({42, static_cast<std::uint64_t>(prompt)}));
      total += score_trajectory(traj, scenes[prompt]).mean_single();
    }
    return total / 16.0;
  };
  CHECK(mean_single(trained) > mean_single(init));
}

TEST_CASE("checkpoint round trip is bit exact") {
  const ModelSpec spec = small_spec();
  const DenoiserParams params = DenoiserParams::initialize(spec, 31);
  const NoiseSchedule schedule = build_noise_schedule(spec.steps);
  Checkpoint ckpt{params, schedule, std::nullopt, "abc"};
  const std::string text = checkpoint_to_json(ckpt);
  const Checkpoint back = checkpoint_from_json(text);
  CHECK(back.params == params);
  CHECK(back.schedule == schedule);
  CHECK(back.config_hash == "abc");
  CHECK_FALSE(back.trainer.has_value());
  CHECK(checkpoint_to_json(back) == text);

  TrainerState state;
  state.epoch = 3;
  state.controller = {1.25, -0.5, true};
  state.normalizer.single = {0.1, 0.2, true};
  std::vector<DenseArray> grads;
  for (const DenseArray& a : params.arrays) grads.push_back(DenseArray(a.shape(), 1e-3));
  DenoiserParams moving = params;
  state.optimizer.step(moving.arrays, grads);
  ckpt.trainer = state;
  const Checkpoint back2 = checkpoint_from_json(checkpoint_to_json(ckpt));
  REQUIRE(back2.trainer.has_value());
  CHECK(back2.trainer->epoch == 3);
  CHECK(back2.trainer->controller == state.controller);
  CHECK(back2.trainer->normalizer.single == state.normalizer.single);
  CHECK(back2.trainer->optimizer.first_moments() == state.optimizer.first_moments());
  CHECK(back2.trainer->optimizer.second_moments() == state.optimizer.second_moments());
  CHECK(back2.trainer->optimizer.steps() == 1);

  CHECK_THROWS_AS(checkpoint_from_json("{\"format_version\": 99}"), FormatError);
  CHECK_THROWS_AS(checkpoint_from_json("not json"), FormatError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), FormatError);
}
