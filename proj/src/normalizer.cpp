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

#include "mvzigal/normalizer.hpp"

#include <algorithm>
#include <cmath>

#include "mvzigal/errors.hpp"

namespace mvz {

void RunningStat::update(std::span<const double> batch, NormalizationMode mode, double decay) {
  if (batch.empty()) throw ContractError("normalizer update on an empty batch");
  double m = 0.0;
  for (double x : batch) m += x;
  m /= static_cast<double>(batch.size());
  double v = 0.0;
  for (double x : batch) v += (x - m) * (x - m);
  v /= static_cast<double>(batch.size());
  ++count;
  // Weight of the new batch in the debiased average; 1 on the first batch,
  // tending to 1 - decay.
  double w = 1.0;
  if (mode == NormalizationMode::kRunning) {
    w = (1.0 - decay) / (1.0 - std::pow(decay, static_cast<double>(count)));
  }
  mean = (1.0 - w) * mean + w * m;
  var = (1.0 - w) * var + w * v;
}

double RunningStat::normalize(double raw, double epsilon) const {
  return (raw - mean) / std::max(std::sqrt(var), epsilon);
}

void normalize_rewards(std::span<RewardRecord> records, RunningNormalizer& normalizer) {
  if (records.empty()) throw ContractError("normalize_rewards on an empty batch");
  std::vector<double> singles;
  std::vector<double> joints;
  for (const RewardRecord& r : records) {
    singles.insert(singles.end(), r.single.begin(), r.single.end());
    joints.push_back(r.joint);
  }
  normalizer.single.update(singles, normalizer.mode, normalizer.decay);
  normalizer.joint.update(joints, normalizer.mode, normalizer.decay);
  for (RewardRecord& r : records) {
    r.single_norm.clear();
    for (double s : r.single) r.single_norm.push_back(normalizer.single.normalize(s, normalizer.epsilon));
    r.joint_norm = normalizer.joint.normalize(r.joint, normalizer.epsilon);
    r.normalized = true;
  }
}

std::string normalization_mode_name(NormalizationMode mode) {
  return mode == NormalizationMode::kRunning ? "running" : "batch";
}

}  // namespace mvz
