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

#include "mvzigal/schedule.hpp"

#include <cmath>
#include <string>

#include "mvzigal/errors.hpp"

namespace mvz {

double NoiseSchedule::noise_coef(int t) const { return beta[t] / std::sqrt(1.0 - alphabar[t]); }

NoiseSchedule build_noise_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 2) throw ConfigError("noise schedule needs T >= 2, got " + std::to_string(steps));
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw ConfigError("noise schedule betas must satisfy 0 < start <= end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.beta.assign(steps + 1, 0.0);
  s.alphabar.assign(steps + 1, 1.0);
  s.sigma.assign(steps + 1, 0.0);
  for (int t = 1; t <= steps; ++t) {
    s.beta[t] = beta_start + (beta_end - beta_start) * static_cast<double>(t - 1) /
                                 static_cast<double>(steps - 1);
    s.alphabar[t] = s.alphabar[t - 1] * (1.0 - s.beta[t]);
    s.sigma[t] = std::sqrt(s.beta[t] * (1.0 - s.alphabar[t - 1]) / (1.0 - s.alphabar[t]));
  }
  return s;
}

}  // namespace mvz
