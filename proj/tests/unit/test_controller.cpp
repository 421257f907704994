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
#include <vector>

#include "mvzigal/controller.hpp"
#include "mvzigal/errors.hpp"
#include "mvzigal/normalizer.hpp"
#include "mvzigal/rng.hpp"

using namespace mvz;

namespace {

TrajectoryPair joint_pair(double s, double z) {
  TrajectoryPair p;
  p.first_rewards.joint_norm = s;
  p.second_rewards.joint_norm = z;
  p.first_rewards.normalized = p.second_rewards.normalized = true;
  return p;
}

RewardRecord raw(std::vector<double> single, double joint) {
  RewardRecord r;
  r.single = std::move(single);
  r.joint = joint;
  return r;
}

}  // namespace

TEST_CASE("batch-average joint reward") {
  const TrajectoryPair one[] = {joint_pair(0.2, 0.4)};
  CHECK(std::abs(batch_avg_joint_reward(one) - 0.3) <= 1e-15);
  const std::vector<TrajectoryPair> flat(5, joint_pair(-0.7, -0.7));
  CHECK(std::abs(batch_avg_joint_reward(flat) + 0.7) <= 1e-15);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TrajectoryPair> batch;
    double acc = 0.0;
    const int b = 1 + trial;
    for (int i = 0; i < b; ++i) {
      const double s = rng.uniform(-3, 3), z = rng.uniform(-3, 3);
      batch.push_back(joint_pair(s, z));
      acc += s + z;
    }
    CHECK(std::abs(batch_avg_joint_reward(batch) - acc / (2.0 * b)) <= 1e-12);
  }
  CHECK_THROWS_AS(batch_avg_joint_reward(std::vector<TrajectoryPair>{}), ContractError);
  TrajectoryPair unscored;
  const TrajectoryPair bad[] = {unscored};
  CHECK_THROWS_AS(batch_avg_joint_reward(bad), ContractError);
}

TEST_CASE("threshold updates") {
  ControllerConfig cfg;
  ConstraintState s;
  s.tau = 1.0;
  s.initialized = true;
  CHECK(std::abs(update_tau(s, 0.0, cfg) - 0.99) <= 1e-15);
  ConstraintState fresh;
  CHECK(update_tau(fresh, 0.731, cfg) == 0.731);
  ControllerConfig fixed = cfg;
  fixed.tau_mode = TauMode::kFixed;
  fixed.tau_fixed = 2.5;
  ConstraintState f = initial_constraint_state(fixed);
  CHECK(f.tau == 2.5);
  CHECK(update_tau(f, -9.0, fixed) == 2.5);
}

TEST_CASE("threshold contraction toward a constant input") {
  const ControllerConfig cfg;
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    ConstraintState s;
    s.tau = rng.uniform(-5, 5);
    s.initialized = true;
    const double tau0 = s.tau;
    const double r = rng.uniform(-5, 5);
    for (int k = 1; k <= 300; ++k) {
      update_tau(s, r, cfg);
      const double want = std::pow(0.99, k) * std::abs(tau0 - r);
      CHECK(std::abs(std::abs(s.tau - r) - want) <= 1e-12);
    }
  }
}

TEST_CASE("threshold stays between its previous value and the input") {
  Rng rng(3);
  ControllerConfig cfg;
  ConstraintState s;
  update_tau(s, 0.0, cfg);
  for (int i = 0; i < 5000; ++i) {
    cfg.beta_tau = rng.uniform(0.0, 0.999);
    const double prev = s.tau;
    const double r = rng.uniform(-10, 10);
    update_tau(s, r, cfg);
    CHECK(s.tau >= std::min(prev, r));
    CHECK(s.tau <= std::max(prev, r));
  }
}

TEST_CASE("multiplier update examples") {
  const ControllerConfig cfg;
  ConstraintState s;
  CHECK(std::abs(update_lambda(s, 0.3, 0.5, 0.5, cfg) - 0.02) <= 1e-15);
  s.lambda = 0.05;
  CHECK(std::abs(update_lambda(s, 0.9, 0.5, 0.5, cfg) - 0.046) <= 1e-15);
  s.lambda = 4.99;
  CHECK(update_lambda(s, 0.0, 0.5, 0.5, cfg) == 5.0);
  s.lambda = 0.001;
  CHECK(update_lambda(s, 3.0, 0.5, 0.5, cfg) == 0.0);
}

TEST_CASE("gate and magnitude use separate thresholds") {
  const ControllerConfig cfg;
  ConstraintState s;
  // Gate says satisfied (0.4 >= 0.3) so the small step applies, but the
  // magnitude comes from the other threshold.
  update_lambda(s, 0.4, 0.3, 0.9, cfg);
  CHECK(std::abs(s.lambda - 0.01 * 0.5) <= 1e-15);
}

TEST_CASE("controller step indexing modes") {
  ControllerConfig cfg;
  ConstraintState a = initial_constraint_state(cfg);
  const ControllerStep first = controller_step(a, 0.5, cfg);
  CHECK(first.tau == 0.5);
  CHECK_FALSE(first.violated);
  CHECK(first.lambda == 0.0);
  // tau_1 = 0.99 * 0.5 + 0.01 * 0.1 = 0.496; magnitude uses tau_0 = 0.5.
  const ControllerStep second = controller_step(a, 0.1, cfg);
  CHECK(std::abs(second.tau - 0.496) <= 1e-15);
  CHECK(second.violated);
  CHECK(std::abs(second.lambda - 0.1 * (0.5 - 0.1)) <= 1e-15);

  cfg.tau_indexing = TauIndexing::kEquation;
  ConstraintState b = initial_constraint_state(cfg);
  controller_step(b, 0.5, cfg);
  const ControllerStep eq = controller_step(b, 0.1, cfg);
  CHECK(std::abs(eq.lambda - 0.1 * (0.496 - 0.1)) <= 1e-15);
}

TEST_CASE("constant violation and satisfaction move lambda by exact increments") {
  ControllerConfig cfg;
  cfg.tau_mode = TauMode::kFixed;
  cfg.tau_fixed = 1.0;
  ConstraintState s = initial_constraint_state(cfg);
  const double g = 0.3;
  double expected = 0.0;
  for (int k = 0; k < 200; ++k) {
    controller_step(s, 1.0 - g, cfg);
    expected = std::min(5.0, expected + 0.1 * g);
    CHECK(std::abs(s.lambda - expected) <= 1e-12);
  }
  CHECK(s.lambda == 5.0);
  for (int k = 0; k < 2000; ++k) {
    controller_step(s, 1.0 + g, cfg);
    expected = std::max(0.0, expected - 0.01 * g);
    CHECK(std::abs(s.lambda - expected) <= 1e-12);
  }
  CHECK(s.lambda == 0.0);
}

TEST_CASE("lambda stays in [0, 5] across 1e4 randomized updates") {
  Rng rng(4);
  int violations = 0;
  for (int run = 0; run < 10; ++run) {
    ControllerConfig cfg;
    cfg.alpha_mode = run % 2 ? AlphaMode::kFixed : AlphaMode::kAdaptive;
    cfg.tau_mode = run % 3 ? TauMode::kSelfPaced : TauMode::kFixed;
    cfg.tau_fixed = rng.uniform(-1, 1);
    cfg.tau_indexing = run % 4 ? TauIndexing::kAlgorithm : TauIndexing::kEquation;
    ConstraintState s = initial_constraint_state(cfg);
    for (int k = 0; k < 1000; ++k) {
      controller_step(s, rng.uniform(-50, 50), cfg);
      if (!(s.lambda >= 0.0 && s.lambda <= 5.0)) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("controller config validation") {
  ControllerConfig c;
  CHECK_NOTHROW(c.validate());
  c.alpha_minus = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.beta_tau = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.lambda_max = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.lambda_init = 6.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  CHECK(c.alpha_plus == 0.1);
  CHECK(c.alpha_minus == 0.01);
  CHECK(c.beta_tau == 0.99);
  CHECK(c.lambda_max == 5.0);
}

TEST_CASE("normalizer: first batch is standardized") {
  RunningNormalizer n;
  std::vector<RewardRecord> recs = {raw({1.0}, 1.0), raw({2.0}, 2.0), raw({3.0}, 3.0)};
  normalize_rewards(recs, n);
  CHECK(std::abs(recs[0].joint_norm + 1.224744871391589) <= 1e-12);
  CHECK(std::abs(recs[1].joint_norm) <= 1e-15);
  CHECK(std::abs(recs[2].joint_norm - 1.224744871391589) <= 1e-12);
  CHECK(std::abs(recs[2].single_norm[0] - 1.224744871391589) <= 1e-12);
  for (const auto& r : recs) CHECK(r.normalized);
}

TEST_CASE("normalizer: constant batch normalizes to zero") {
  for (auto mode : {NormalizationMode::kRunning, NormalizationMode::kBatch}) {
    RunningNormalizer n;
    n.mode = mode;
    std::vector<RewardRecord> recs(4, raw({-0.5, -0.5}, -2.0));
    normalize_rewards(recs, n);
    for (const auto& r : recs) {
      CHECK(r.joint_norm == 0.0);
      for (double s : r.single_norm) CHECK(s == 0.0);
    }
  }
}

TEST_CASE("normalizer: running statistics follow a debiased EMA") {
  Rng rng(5);
  RunningNormalizer n;
  double acc_mean = 0.0, acc_var = 0.0, mass = 0.0;
  for (int b = 0; b < 30; ++b) {
    std::vector<RewardRecord> recs;
    std::vector<double> joints;
    for (int i = 0; i < 6; ++i) {
      joints.push_back(rng.uniform(-3, 1) + 0.1 * b);
      recs.push_back(raw({rng.uniform(-1, 0), rng.uniform(-1, 0)}, joints.back()));
    }
    double m = 0.0, v = 0.0;
    for (double j : joints) m += j / 6.0;
    for (double j : joints) v += (j - m) * (j - m) / 6.0;
    acc_mean = 0.95 * acc_mean + 0.05 * m;
    acc_var = 0.95 * acc_var + 0.05 * v;
    mass = 0.95 * mass + 0.05;
    const double mean = acc_mean / mass, var = acc_var / mass;
    if (b == 0) CHECK(std::abs(mean - m) <= 1e-12);
    normalize_rewards(recs, n);
    CHECK(std::abs(n.joint.mean - mean) <= 1e-12);
    CHECK(std::abs(n.joint.var - var) <= 1e-12);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(std::abs(recs[i].joint_norm - (joints[i] - mean) / std::sqrt(var)) <= 1e-10);
    }
  }
}

TEST_CASE("normalizer: batch mode zeroes the mean joint reward") {
  Rng rng(6);
  RunningNormalizer n;
  n.mode = NormalizationMode::kBatch;
  for (int b = 0; b < 5; ++b) {
    std::vector<RewardRecord> recs;
    for (int i = 0; i < 8; ++i) recs.push_back(raw({rng.uniform(-1, 0)}, rng.uniform(-5, 0)));
    normalize_rewards(recs, n);
    double acc = 0.0;
    for (const auto& r : recs) acc += r.joint_norm;
    CHECK(std::abs(acc) <= 1e-12);
  }
  CHECK_THROWS_AS(normalize_rewards(std::span<RewardRecord>{}, n), ContractError);
}
