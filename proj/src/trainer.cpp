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

#include "mvzigal/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mvzigal/errors.hpp"
#include "mvzigal/pretrain.hpp"

namespace mvz {

namespace {

void check_rewards_finite(const TrajectoryPair& pair, int epoch) {
  auto finite = [](const RewardRecord& r) {
    if (!std::isfinite(r.joint)) return false;
    return std::all_of(r.single.begin(), r.single.end(), [](double x) { return std::isfinite(x); });
  };
  const bool second_ok = pair.second.latents.empty() || finite(pair.second_rewards);
  if (!finite(pair.first_rewards) || !second_ok) {
    throw NumericError("epoch " + std::to_string(epoch) + ": non-finite reward for prompt " +
                       std::to_string(pair.prompt()));
  }
}

PairKind pair_kind(Method method) {
  if (!uses_pairs(method)) return PairKind::kSingle;
  return uses_zigzag_pairs(method) ? PairKind::kZigzagPair : PairKind::kStandardPair;
}

bool uses_reference(Method method) {
  return method != Method::kMvPg && method != Method::kMvcZigpg;
}

std::vector<TrajectoryPair> sample(const SamplingContext& ctx, std::span<const PairRequest> reqs,
                                   Execution exec) {
  return exec == Execution::kParallel ? sample_pairs(ctx, reqs) : sample_pairs_serial(ctx, reqs);
}

bool finite_loss(const LossResult& r) {
  if (!std::isfinite(r.value)) return false;
  return std::all_of(r.grads.begin(), r.grads.end(),
                     [](const DenseArray& g) { return g.all_finite(); });
}

std::vector<double> mvc_view_rewards(const RewardRecord& rec, double lambda) {
  std::vector<double> out;
  for (double s : rec.single_norm) out.push_back(mvc_reward(s, rec.joint_norm, lambda));
  return out;
}

}  // namespace

TrainerState initial_trainer_state(const TrainConfig& config) {
  TrainerState state;
  state.controller = initial_constraint_state(config.controller);
  state.normalizer.mode = config.normalize_mode;
  state.normalizer.decay = config.normalize_decay;
  state.normalizer.epsilon = config.normalize_epsilon;
  state.optimizer = AdamW(config.adam);
  return state;
}

TrainingSetup make_training_setup(const TrainConfig& config) {
  config.validate();
  TrainingSetup setup;
  setup.schedule = build_noise_schedule(config.model.steps, config.beta_start, config.beta_end);
  setup.scenes = make_scene_bank(config.model.prompts, config.model.views, config.scene_seed,
                                 config.model.dim, config.scene_gamma);
  setup.config_hash = config_hash(config);
  return setup;
}

EpochMetrics run_epoch(DenoiserParams& params, TrainerState& state, const TrainConfig& config,
                       const TrainingSetup& setup, Execution exec) {
  const auto start = std::chrono::steady_clock::now();
  const int epoch = state.epoch + 1;
  const auto k = static_cast<std::uint64_t>(epoch);
  const Method method = config.method;
  const auto per_batch = static_cast<std::size_t>(config.batch);
  const auto batches = static_cast<std::size_t>(config.batches_per_epoch);

  // Sampling, one normalizer update per sampled batch.
  const SamplingContext ctx{&params, &setup.schedule, &setup.scenes, config.guidance,
                            config.zigzag, pair_kind(method)};
  Rng prompt_rng(derive_seed({config.seed, 0x70726f6d, k}));
  std::vector<TrajectoryPair> pairs;
  pairs.reserve(per_batch * batches);
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<PairRequest> reqs(per_batch);
    for (std::size_t i = 0; i < per_batch; ++i) {
      reqs[i].prompt = prompt_rng.uniform_int(config.model.prompts);
      reqs[i].seed_first = derive_seed({config.seed, k, b, i, 1});
      reqs[i].seed_second = derive_seed({config.seed, k, b, i, 2});
    }
    std::vector<TrajectoryPair> sampled = sample(ctx, reqs, exec);
    std::vector<RewardRecord> records;
    for (const TrajectoryPair& p : sampled) {
      check_rewards_finite(p, epoch);
      records.push_back(p.first_rewards);
      if (ctx.kind != PairKind::kSingle) records.push_back(p.second_rewards);
    }
    normalize_rewards(records, state.normalizer);
    std::size_t r = 0;
    for (TrajectoryPair& p : sampled) {
      p.first_rewards = records[r++];
      if (ctx.kind != PairKind::kSingle) p.second_rewards = records[r++];
      pairs.push_back(std::move(p));
    }
  }

  EpochMetrics m;
  m.epoch = epoch;
  m.method = method_name(method);
  m.config_hash = setup.config_hash;
  {
    double single = 0.0, joint = 0.0, single_n = 0.0, joint_n = 0.0;
    std::size_t n = 0;
    auto add = [&](const RewardRecord& rec) {
      single += rec.mean_single();
      joint += rec.joint;
      single_n += rec.mean_single_norm();
      joint_n += rec.joint_norm;
      ++n;
    };
    for (const TrajectoryPair& p : pairs) {
      add(p.first_rewards);
      if (ctx.kind != PairKind::kSingle) add(p.second_rewards);
    }
    const double inv = 1.0 / static_cast<double>(n);
    m.mean_single_raw = single * inv;
    m.mean_joint_raw = joint * inv;
    m.mean_single_norm = single_n * inv;
    m.mean_joint_norm = joint_n * inv;
  }

  if (uses_controller(method)) {
    const ControllerStep step =
        controller_step(state.controller, batch_avg_joint_reward(pairs), config.controller);
    m.lambda = step.lambda;
    m.tau = step.tau;
    m.violated = step.violated;
  }
  const double lambda = state.controller.lambda;

  std::vector<std::vector<double>> targets(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    switch (method) {
      case Method::kZigal: targets[i] = mvc_advantages(pairs[i], 0.0); break;
      case Method::kWsZigal: targets[i] = ws_advantages(pairs[i], config.objective.w_mv); break;
      case Method::kMvcZigal: targets[i] = mvc_advantages(pairs[i], lambda); break;
      default: break;
    }
  }

  // Frozen snapshot and its log-probabilities of every stored chain.
  const DenoiserParams snapshot = params;
  std::vector<LogProbTable> ref_first(pairs.size());
  std::vector<LogProbTable> ref_second(pairs.size());
  if (uses_reference(method)) {
    std::vector<const MultiviewTrajectory*> trajs;
    for (const TrajectoryPair& p : pairs) {
      trajs.push_back(&p.first);
      trajs.push_back(&p.second);
    }
    std::vector<LogProbTable> tables =
        exec == Execution::kParallel ? log_prob_tables(snapshot, setup.schedule, trajs)
                                     : log_prob_tables_serial(snapshot, setup.schedule, trajs);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      ref_first[i] = std::move(tables[2 * i]);
      ref_second[i] = std::move(tables[2 * i + 1]);
    }
  }

  double loss_sum = 0.0;
  int updates = 0;
  double max_norm = 0.0;
  const auto accum = static_cast<std::size_t>(config.grad_accum);
  for (int inner = 0; inner < config.inner_epochs; ++inner) {
    for (std::size_t b0 = 0; b0 < batches; b0 += accum) {
      const std::size_t begin = b0 * per_batch;
      const std::size_t end = std::min(b0 + accum, batches) * per_batch;
      const ItemLoss item = [&](std::size_t j) -> std::optional<LossResult> {
        const std::size_t i = begin + j;
        const TrajectoryPair& pair = pairs[i];
        LossResult r;
        switch (method) {
          case Method::kMvPg: {
            const WeightedTrajectory w = joint_weighted(pair.first, pair.first_rewards.joint_norm);
            r = mv_pg_loss(std::span(&w, 1), params, setup.schedule);
            break;
          }
          case Method::kMvcZigpg: {
            const WeightedTrajectory w[2] = {
                {&pair.first, mvc_view_rewards(pair.first_rewards, lambda)},
                {&pair.second, mvc_view_rewards(pair.second_rewards, lambda)}};
            r = mv_pg_loss(w, params, setup.schedule);
            break;
          }
          case Method::kMvDpo:
            if (pair.first_rewards.joint == pair.second_rewards.joint) return std::nullopt;
            r = mv_dpo_loss(pair, ref_first[i], ref_second[i], params, setup.schedule,
                            config.objective);
            break;
          case Method::kMvRdl:
            r = mv_rdl_loss(pair, ref_first[i], ref_second[i], params, setup.schedule,
                            config.objective);
            break;
          case Method::kMvZigal:
            r = mv_zigal_loss(pair, ref_first[i], ref_second[i], params, setup.schedule,
                              config.objective);
            break;
          default:
            r = mvc_zigal_loss(pair, targets[i], ref_first[i], ref_second[i], params,
                               setup.schedule, config.objective);
            break;
        }
        if (!finite_loss(r)) {
          throw NumericError("epoch " + std::to_string(epoch) + ", pair " + std::to_string(i) +
                             " (prompt " + std::to_string(pair.prompt()) +
                             "): non-finite loss or gradient");
        }
        return r;
      };
      AveragedLoss avg = exec == Execution::kParallel ? average_losses(end - begin, item)
                                                      : average_losses_serial(end - begin, item);
      if (avg.used == 0) continue;
      const double norm = clip_global_norm(avg.mean.grads, config.max_grad_norm);
      state.optimizer.step(params.arrays, avg.mean.grads);
      if (!params.all_finite()) {
        throw NumericError("epoch " + std::to_string(epoch) + ": parameters became non-finite");
      }
      loss_sum += avg.mean.value;
      max_norm = std::max(max_norm, std::min(norm, config.max_grad_norm));
      ++updates;
    }
  }
  m.loss = updates > 0 ? loss_sum / updates : 0.0;
  m.grad_norm = max_norm;

  state.epoch = epoch;
  if (config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
    m.zigzag_gap = evaluate(params, config, setup, exec).gap;
  }
  if (config.record_wall_time) {
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  }
  return m;
}

EvalReport evaluate(const DenoiserParams& params, const NoiseSchedule& schedule,
                    const std::vector<SceneSpec>& scenes, const GuidanceConfig& guidance,
                    const ZigzagSchedule& zigzag, int prompts, int seeds_per_prompt,
                    std::uint64_t seed, Execution exec) {
  if (prompts < 1 || prompts > static_cast<int>(scenes.size())) {
    throw ConfigError("evaluate: prompt count outside [1, scene count]");
  }
  if (seeds_per_prompt < 1) throw ConfigError("evaluate: seeds per prompt must be >= 1");
  std::vector<PairRequest> reqs;
  for (int p = 0; p < prompts; ++p) {
    for (int s = 0; s < seeds_per_prompt; ++s) {
      PairRequest req;
      req.prompt = p;
      req.seed_first = derive_seed({seed, 0x6576616c, static_cast<std::uint64_t>(p),
                                    static_cast<std::uint64_t>(s)});
      req.seed_second = req.seed_first;
      reqs.push_back(req);
    }
  }
  const SamplingContext ctx{&params, &schedule, &scenes, guidance, zigzag, PairKind::kZigzagPair};
  const std::vector<TrajectoryPair> pairs = sample(ctx, reqs, exec);
  EvalReport rep;
  rep.prompts = prompts;
  rep.seeds_per_prompt = seeds_per_prompt;
  for (const TrajectoryPair& p : pairs) {
    rep.standard_single += p.first_rewards.mean_single();
    rep.standard_joint += p.first_rewards.joint;
    rep.zigzag_single += p.second_rewards.mean_single();
    rep.zigzag_joint += p.second_rewards.joint;
  }
  const double inv = 1.0 / static_cast<double>(pairs.size());
  rep.standard_single *= inv;
  rep.standard_joint *= inv;
  rep.zigzag_single *= inv;
  rep.zigzag_joint *= inv;
  rep.gap = rep.zigzag_joint - rep.standard_joint;
  return rep;
}

EvalReport evaluate(const DenoiserParams& params, const TrainConfig& config,
                    const TrainingSetup& setup, Execution exec) {
  const int prompts = config.eval_prompts > 0 ? config.eval_prompts : config.model.prompts;
  return evaluate(params, setup.schedule, setup.scenes, config.guidance, config.zigzag, prompts,
                  config.eval_seeds, config.seed, exec);
}

std::string format_eval_report(const EvalReport& r) {
  std::string out;
  out += "prompts = " + std::to_string(r.prompts) + "\n";
  out += "seeds_per_prompt = " + std::to_string(r.seeds_per_prompt) + "\n";
  out += "standard_single = " + format_real(r.standard_single) + "\n";
  out += "standard_joint = " + format_real(r.standard_joint) + "\n";
  out += "zigzag_single = " + format_real(r.zigzag_single) + "\n";
  out += "zigzag_joint = " + format_real(r.zigzag_joint) + "\n";
  out += "zigzag_gap = " + format_real(r.gap) + "\n";
  return out;
}

FinetuneResult finetune(const TrainConfig& config, DenoiserParams params,
                        std::optional<TrainerState> resume, const CheckpointHook& hook,
                        Execution exec) {
  const TrainingSetup setup = make_training_setup(config);
  if (!(params.spec == config.model)) {
    throw ConfigError("checkpoint model shape does not match the config's model section");
  }
  FinetuneResult out{std::move(params), initial_trainer_state(config), {}};
  if (resume) {
    // Statistics come from the checkpoint, hyperparameters from the config.
    out.state.epoch = resume->epoch;
    out.state.controller = resume->controller;
    out.state.normalizer.single = resume->normalizer.single;
    out.state.normalizer.joint = resume->normalizer.joint;
    out.state.optimizer.restore(resume->optimizer.steps(), resume->optimizer.first_moments(),
                                resume->optimizer.second_moments());
  }
  for (int epoch = out.state.epoch + 1; epoch <= config.epochs; ++epoch) {
    out.metrics.push_back(run_epoch(out.params, out.state, config, setup, exec));
    const bool due = config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0;
    if (hook && (due || epoch == config.epochs)) hook(out.params, out.state);
  }
  return out;
}

DenoiserParams pretrain_from_config(const TrainConfig& config, std::vector<double>* losses) {
  const TrainingSetup setup = make_training_setup(config);
  DenoiserParams params = DenoiserParams::initialize(config.model, derive_seed({config.seed, 0x1417}));
  if (config.pretrain.steps == 0) return params;
  PretrainConfig pc = config.pretrain;
  pc.seed = config.seed;
  return pretrain(setup.scenes, setup.schedule, pc, std::move(params), losses);
}

}  // namespace mvz
