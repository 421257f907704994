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

#include "mvzigal/optimizer.hpp"

#include <cmath>

#include "mvzigal/errors.hpp"

namespace mvz {

void AdamW::step(std::vector<DenseArray>& params, const std::vector<DenseArray>& grads) {
  if (params.size() != grads.size()) throw ContractError("AdamW: params/grads count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.shape(), 0.0);
      v_.emplace_back(p.shape(), 0.0);
    }
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    DenseArray& p = params[k];
    const DenseArray& g = grads[k];
    if (p.shape() != g.shape()) throw ShapeError("AdamW: gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[k][i] = config_.beta1 * m_[k][i] + (1.0 - config_.beta1) * g[i];
      v_[k][i] = config_.beta2 * v_[k][i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m_[k][i] / bc1;
      const double v_hat = v_[k][i] / bc2;
      p[i] -= config_.lr * config_.weight_decay * p[i];
      p[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void AdamW::restore(long long steps, std::vector<DenseArray> m, std::vector<DenseArray> v) {
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

double global_norm(const std::vector<DenseArray>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double x : g.data()) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_global_norm(std::vector<DenseArray>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& g : grads) {
      for (double& x : g.storage()) x *= scale;
    }
  }
  return norm;
}

}  // namespace mvz
