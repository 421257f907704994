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

#pragma once

#include <vector>

#include "mvzigal/dense_array.hpp"

namespace mvz {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

/// Adam with decoupled weight decay over a list of parameter arrays.
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(AdamConfig config) : config_(config) {}

  void step(std::vector<DenseArray>& params, const std::vector<DenseArray>& grads);

  const AdamConfig& config() const { return config_; }
  long long steps() const { return steps_; }
  const std::vector<DenseArray>& first_moments() const { return m_; }
  const std::vector<DenseArray>& second_moments() const { return v_; }
  void restore(long long steps, std::vector<DenseArray> m, std::vector<DenseArray> v);

 private:
  AdamConfig config_;
  long long steps_ = 0;
  std::vector<DenseArray> m_;
  std::vector<DenseArray> v_;
};

double global_norm(const std::vector<DenseArray>& grads);

// Rescales grads so their global norm is at most max_norm; returns the
// norm before clipping.
double clip_global_norm(std::vector<DenseArray>& grads, double max_norm);

}  // namespace mvz
