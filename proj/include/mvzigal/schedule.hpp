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

namespace mvz {

/// Few-step ancestral noise schedule. Vectors are indexed by timestep
/// t = 0..T; entry 0 of `beta` and `sigma` is unused and `alphabar[0] == 1`.
struct NoiseSchedule {
  int steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> beta;
  std::vector<double> alphabar;
  std::vector<double> sigma;

  double alpha(int t) const { return 1.0 - beta[t]; }
  // Coefficient of the noise estimate in the ancestral mean.
  double noise_coef(int t) const;

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;
};

/// Linear betas from `beta_start` to `beta_end` over T >= 2 steps. sigma_t is
/// the ancestral posterior stddev, which vanishes at t = 1.
NoiseSchedule build_noise_schedule(int steps, double beta_start = 1e-2, double beta_end = 0.3);

}  // namespace mvz
