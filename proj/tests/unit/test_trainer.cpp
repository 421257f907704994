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
#include <limits>

#include "mvzigal/checkpoint.hpp"
#include "mvzigal/errors.hpp"
#include "mvzigal/trainer.hpp"

using namespace mvz;

namespace {

TrainConfig small_config(Method method = Method::kMvcZigal) {
  TrainConfig c;
  c.method = method;
  c.seed = 3;
  c.model.views = 2;
  c.model.steps = 3;
  c.model.prompts = 4;
  c.model.hidden = 16;
  c.model.embed_dim = 4;
  c.pretrain.steps = 150;
  c.epochs = 3;
  c.batch = 4;
  c.batches_per_epoch = 2;
  c.eval_seeds = 2;
  c.record_wall_time = false;
  return c;
}

const DenoiserParams& pretrained() {
  static const DenoiserParams p = pretrain_from_config(small_config());
  return p;
}

}  // namespace

TEST_CASE("finetuning is deterministic and thread-count independent") {
  const TrainConfig c = small_config();
  const FinetuneResult a = finetune(c, pretrained());
  const FinetuneResult b = finetune(c, pretrained());
  const FinetuneResult s = finetune(c, pretrained(), std::nullopt, {}, Execution::kSerial);
  CHECK(a.metrics == b.metrics);
  CHECK(a.params == b.params);
  CHECK(a.metrics == s.metrics);
  CHECK(a.params == s.params);
  REQUIRE(a.metrics.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(a.metrics[k].epoch == k + 1);
}

TEST_CASE("every method trains with a clipped, finite gradient") {
  for (Method m : {Method::kMvPg, Method::kMvDpo, Method::kMvRdl, Method::kMvZigal, Method::kZigal,
                   Method::kWsZigal, Method::kMvcZigpg, Method::kMvcZigal}) {
    CAPTURE(method_name(m));
    TrainConfig c = small_config(m);
    c.epochs = 2;
    const FinetuneResult r = finetune(c, pretrained());
    REQUIRE(r.metrics.size() == 2);
    for (const EpochMetrics& e : r.metrics) {
      CHECK(e.method == method_name(m));
      CHECK(std::isfinite(e.loss));
      CHECK(e.grad_norm >= 0.0);
      CHECK(e.grad_norm <= 5.0);
      CHECK(e.lambda.has_value() == uses_controller(m));
      CHECK(e.violated.has_value() == uses_controller(m));
      CHECK(e.zigzag_gap.has_value());
      CHECK_FALSE(e.wall_ms.has_value());
    }
    CHECK(r.params.all_finite());
    CHECK_FALSE(r.params == pretrained());
  }
}

TEST_CASE("lambda stays inside its cap during training") {
  TrainConfig c = small_config();
  c.controller.tau_mode = TauMode::kFixed;
  c.controller.tau_fixed = 10.0;
  c.epochs = 4;
  const FinetuneResult r = finetune(c, pretrained());
  double prev = 0.0;
  for (const EpochMetrics& e : r.metrics) {
    CHECK(*e.lambda >= prev);
    CHECK(*e.lambda <= 5.0);
    CHECK(*e.violated);
    CHECK(e.tau == 10.0);
    prev = *e.lambda;
  }
}

TEST_CASE("zero epochs is a no-op") {
  TrainConfig c = small_config();
  c.epochs = 0;
  int calls = 0;
  const FinetuneResult r =
      finetune(c, pretrained(), std::nullopt, [&](const DenoiserParams&, const TrainerState&) {
        ++calls;
      });
  CHECK(r.metrics.empty());
  CHECK(r.params == pretrained());
  CHECK(r.state.epoch == 0);
  CHECK(calls == 0);
}

TEST_CASE("checkpoint hook cadence") {
  TrainConfig c = small_config(Method::kZigal);
  c.epochs = 5;
  c.checkpoint_every = 2;
  c.eval_every = 0;
  std::vector<int> seen;
  finetune(c, pretrained(), std::nullopt,
           [&](const DenoiserParams&, const TrainerState& s) { seen.push_back(s.epoch); });
  CHECK(seen == std::vector<int>{2, 4, 5});
}

TEST_CASE("resuming from a stored state reproduces the remaining epochs") {
  TrainConfig c = small_config();
  c.epochs = 4;
  c.checkpoint_every = 2;
  const FinetuneResult full = finetune(c, pretrained());
  std::optional<Checkpoint> mid;
  const TrainingSetup setup = make_training_setup(c);
  finetune(c, pretrained(), std::nullopt, [&](const DenoiserParams& p, const TrainerState& s) {
    if (s.epoch == 2) mid = Checkpoint{p, setup.schedule, s, setup.config_hash};
  });
  REQUIRE(mid.has_value());
  // Through the on-disk format.
  const Checkpoint loaded = checkpoint_from_json(checkpoint_to_json(*mid));
  const FinetuneResult resumed = finetune(c, loaded.params, loaded.trainer);
  REQUIRE(resumed.metrics.size() == 2);
  CHECK(resumed.metrics[0] == full.metrics[2]);
  CHECK(resumed.metrics[1] == full.metrics[3]);
  CHECK(resumed.params == full.params);
}

TEST_CASE("log-ratios against the fresh snapshot are exactly zero") {
  const TrainConfig c = small_config();
  const TrainingSetup setup = make_training_setup(c);
  const SamplingContext ctx{&pretrained(), &setup.schedule, &setup.scenes, c.guidance, c.zigzag,
                            PairKind::kZigzagPair};
  const PairRequest reqs[] = {{1, 5, 6}, {2, 7, 8}};
  auto pairs = sample_pairs(ctx, reqs);
  RunningNormalizer norm;
  for (auto& p : pairs) {
    RewardRecord recs[] = {p.first_rewards, p.second_rewards};
    normalize_rewards(recs, norm);
    p.first_rewards = recs[0];
    p.second_rewards = recs[1];
    const LogProbTable ref_s = trajectory_log_probs(pretrained(), setup.schedule, p.first);
    const LogProbTable ref_z = trajectory_log_probs(pretrained(), setup.schedule, p.second);
    const double a = zigzag_advantage(p);
    const LossResult l = mv_zigal_loss(p, ref_s, ref_z, pretrained(), setup.schedule, c.objective);
    CHECK(l.value == a * a);
  }
}

TEST_CASE("non-finite parameters raise a numeric error") {
  const TrainConfig c = small_config();
  const TrainingSetup setup = make_training_setup(c);
  DenoiserParams broken = pretrained();
  broken[kOutBias][0] = std::numeric_limits<double>::quiet_NaN();
  TrainerState state = initial_trainer_state(c);
  CHECK_THROWS_AS(run_epoch(broken, state, c, setup), NumericError);
}

TEST_CASE("evaluation is deterministic and reports the joint gap") {
  const TrainConfig c = small_config();
  const TrainingSetup setup = make_training_setup(c);
  const EvalReport a = evaluate(pretrained(), c, setup);
  const EvalReport b = evaluate(pretrained(), c, setup, Execution::kSerial);
  CHECK(a == b);
  CHECK(a.prompts == 4);
  CHECK(a.seeds_per_prompt == 2);
  CHECK(a.gap == a.zigzag_joint - a.standard_joint);
  CHECK(a.standard_joint <= 0.0);
  const std::string text = format_eval_report(a);
  CHECK(text.find("gap = ") != std::string::npos);
}

TEST_CASE("gradient accumulation and inner epochs") {
  TrainConfig c = small_config();
  c.inner_epochs = 2;
  c.grad_accum = 2;
  c.epochs = 2;
  const FinetuneResult r = finetune(c, pretrained());
  CHECK(r.state.optimizer.steps() == 2 * 2);
  TrainConfig one = small_config();
  one.epochs = 2;
  CHECK(finetune(one, pretrained()).state.optimizer.steps() == 2 * 2);
  one.grad_accum = 2;
  CHECK(finetune(one, pretrained()).state.optimizer.steps() == 2);
}

TEST_CASE("resume rejects a mismatched model") {
  TrainConfig c = small_config();
  c.model.views = 3;
  CHECK_THROWS(finetune(c, pretrained()));
}
