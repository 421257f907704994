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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mvzigal/dense_array.hpp"
#include "mvzigal/rng.hpp"
#include "mvzigal/scene.hpp"

namespace mvz::testing {

inline DenseArray random_array(const Shape& shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  DenseArray a(shape);
  for (double& x : a.storage()) x = rng.uniform(lo, hi);
  return a;
}

// Relative error with a floor proportional to the function scale, so
// entries that are tiny next to the loss are judged against round-off.
inline double rel_error(double analytic, double numeric, double scale = 1.0) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-6 * std::max(1.0, std::abs(scale))});
  return std::abs(analytic - numeric) / denom;
}

inline double central_difference(double& x, const std::function<double()>& f, double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

/// Worst relative error between `analytic` and central differences of f
/// over the listed flat entries of every array (all entries if `picks` is
/// empty).
inline double worst_fd_error(std::vector<DenseArray>& arrays,
                             const std::vector<DenseArray>& analytic,
                             const std::function<double()>& f,
                             const std::vector<std::pair<std::size_t, std::size_t>>& picks = {},
                             double h = 1e-5) {
  const double scale = f();
  double worst = 0.0;
  auto check = [&](std::size_t a, std::size_t i) {
    const double num = central_difference(arrays[a][i], f, h);
    worst = std::max(worst, rel_error(analytic[a][i], num, scale));
  };
  if (picks.empty()) {
    for (std::size_t a = 0; a < arrays.size(); ++a) {
      for (std::size_t i = 0; i < arrays[a].size(); ++i) check(a, i);
    }
  } else {
    for (const auto& [a, i] : picks) check(a, i);
  }
  return worst;
}

struct GridOptimum {
  double objective = 0.0;
  double sum_single = 0.0;
  double joint = 0.0;
  DenseArray points;  // view frame, [V, d]
};

// Lattice search for max sum_v R_v + lambda * R_mv over view-frame points,
// by coordinate ascent over single views plus common shifts. The objective
// is concave, so the lattice optimum sits within a cell of the true one.
inline GridOptimum lagrangian_grid_search(const SceneSpec& scene, double lambda,
                                          double cell = 0.01) {
  const auto views = static_cast<std::size_t>(scene.views());
  const auto d = static_cast<std::size_t>(scene.dim());
  DenseArray u(Shape{views, d});
  for (std::size_t v = 0; v < views; ++v) {
    const auto target = target_view(scene, static_cast<int>(v));
    std::vector<double> x(d);
    for (std::size_t c = 0; c < d; ++c) x[c] = target[c] + scene.offsets[v][c];
    const auto back = rotate(x, -scene.angles[v]);
    for (std::size_t c = 0; c < d; ++c) u.at(v, c) = std::round(back[c] / cell) * cell;
  }
  auto evaluate = [&](const DenseArray& pts, double* single, double* joint) {
    DenseArray x0(Shape{views, d});
    double s = 0.0;
    for (std::size_t v = 0; v < views; ++v) {
      const auto x = rotate(pts.row(v), scene.angles[v]);
      for (std::size_t c = 0; c < d; ++c) x0.at(v, c) = x[c];
      s += single_view_reward(x0.row(v), scene, static_cast<int>(v));
    }
    const double j = joint_view_reward(x0, scene);
    if (single) *single = s;
    if (joint) *joint = j;
    return s + lambda * j;
  };
  double best = evaluate(u, nullptr, nullptr);
  const int reach = 3;
  for (bool moved = true; moved;) {
    moved = false;
    // views.size() single-view blocks, then one common-shift block.
    for (std::size_t block = 0; block <= views; ++block) {
      DenseArray keep = u;
      for (int i = -reach; i <= reach; ++i) {
        for (int j = -reach; j <= reach; ++j) {
          if (i == 0 && j == 0) continue;
          DenseArray trial = keep;
          for (std::size_t v = 0; v < views; ++v) {
            if (block < views && v != block) continue;
            trial.at(v, 0) += i * cell;
            if (d > 1) trial.at(v, 1) += j * cell;
          }
          const double val = evaluate(trial, nullptr, nullptr);
          if (val > best + 1e-13) {
            best = val;
            u = trial;
            moved = true;
          }
        }
      }
    }
  }
  GridOptimum out;
  out.points = u;
  out.objective = evaluate(u, &out.sum_single, &out.joint);
  return out;
}

}  // namespace mvz::testing
