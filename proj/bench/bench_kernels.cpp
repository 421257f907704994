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

// Serial vs OpenMP batch kernels. Set OMP_NUM_THREADS to vary the team.

#include <benchmark/benchmark.h>

#include <vector>

#include "mvzigal/batch_kernels.hpp"
#include "mvzigal/schedule.hpp"

namespace {

using namespace mvz;

struct Fixture {
  ModelSpec spec;
  DenoiserParams params;
  NoiseSchedule schedule;
  std::vector<SceneSpec> scenes;
  SamplingContext ctx;
  std::vector<PairRequest> requests;

  explicit Fixture(int batch)
      : params(DenoiserParams::initialize(spec, 1)),
        schedule(build_noise_schedule(spec.steps)),
        scenes(make_scene_bank(spec.prompts, spec.views, 2, spec.dim, 0.5)) {
    ctx.params = &params;
    ctx.schedule = &schedule;
    ctx.scenes = &scenes;
    for (int i = 0; i < batch; ++i) {
      requests.push_back({i % spec.prompts, static_cast<std::uint64_t>(2 * i),
                          static_cast<std::uint64_t>(2 * i + 1)});
    }
  }
};

template <bool Parallel>
void BM_SamplePairs(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto pairs = Parallel ? sample_pairs(f.ctx, f.requests) : sample_pairs_serial(f.ctx, f.requests);
    benchmark::DoNotOptimize(pairs.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_AverageLosses(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const std::vector<TrajectoryPair> pairs = sample_pairs_serial(f.ctx, f.requests);
  std::vector<const MultiviewTrajectory*> trajs;
  for (const auto& p : pairs) {
    trajs.push_back(&p.first);
    trajs.push_back(&p.second);
  }
  const std::vector<LogProbTable> ref = log_prob_tables_serial(f.params, f.schedule, trajs);
  const ObjectiveConfig cfg;
  const ItemLoss item = [&](std::size_t i) -> std::optional<LossResult> {
    const std::vector<double> adv(static_cast<std::size_t>(f.spec.views), 0.1);
    return mvc_zigal_loss(pairs[i], adv, ref[2 * i], ref[2 * i + 1], f.params, f.schedule, cfg);
  };
  for (auto _ : state) {
    AveragedLoss out = Parallel ? average_losses(pairs.size(), item)
                                : average_losses_serial(pairs.size(), item);
    benchmark::DoNotOptimize(out.mean.value);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SamplePairs<false>)->Name("sample_pairs/serial")->Arg(8)->Arg(64);
BENCHMARK(BM_SamplePairs<true>)->Name("sample_pairs/omp")->Arg(8)->Arg(64);
BENCHMARK(BM_AverageLosses<false>)->Name("average_losses/serial")->Arg(8)->Arg(64);
BENCHMARK(BM_AverageLosses<true>)->Name("average_losses/omp")->Arg(8)->Arg(64);

BENCHMARK_MAIN();
