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

#include "mvzigal/pretrain.hpp"

#include <cmath>

#include "mvzigal/errors.hpp"
#include "mvzigal/optimizer.hpp"

namespace mvz {

namespace {

struct RowSink {
  std::vector<double> latents;
  std::vector<double> context;
  std::vector<double> noise;
  DenoisingBatch::Part part;

  void finish(std::size_t d) {
    const std::size_t rows = part.timesteps.size();
    if (rows == 0) return;
    part.latents = DenseArray(Shape{rows, d}, std::move(latents));
    part.context = DenseArray(Shape{rows, d}, std::move(context));
    part.noise = DenseArray(Shape{rows, d}, std::move(noise));
  }
};

}  // namespace

DenoisingBatch make_denoising_batch(const std::vector<SceneSpec>& scenes,
                                    const NoiseSchedule& schedule, const ModelSpec& spec,
                                    int samples, double dropout, Rng& rng) {
  const auto d = static_cast<std::size_t>(spec.dim);
  const auto views = static_cast<std::size_t>(spec.views);
  RowSink cond;
  RowSink uncond;
  for (int s = 0; s < samples; ++s) {
    const int prompt = rng.uniform_int(static_cast<int>(scenes.size()));
    const int t = 1 + rng.uniform_int(schedule.steps);
    const bool drop = rng.uniform(0.0, 1.0) < dropout;
    const SceneSpec& scene = scenes[static_cast<std::size_t>(prompt)];
    const double signal = std::sqrt(schedule.alphabar[t]);
    const double noise_scale = std::sqrt(1.0 - schedule.alphabar[t]);
    std::vector<double> x(views * d);
    std::vector<double> eps(views * d);
    for (std::size_t v = 0; v < views; ++v) {
      const std::vector<double> clean = target_view(scene, static_cast<int>(v));
      for (std::size_t c = 0; c < d; ++c) {
        eps[v * d + c] = rng.normal();
        x[v * d + c] = signal * clean[c] + noise_scale * eps[v * d + c];
      }
    }
    std::vector<double> mean(d, 0.0);
    for (std::size_t v = 0; v < views; ++v) {
      for (std::size_t c = 0; c < d; ++c) mean[c] += x[v * d + c];
    }
    for (double& m : mean) m /= static_cast<double>(views);
    RowSink& sink = drop ? uncond : cond;
    for (std::size_t v = 0; v < views; ++v) {
      for (std::size_t c = 0; c < d; ++c) {
        sink.latents.push_back(x[v * d + c]);
        sink.context.push_back(mean[c]);
        sink.noise.push_back(eps[v * d + c]);
      }
      sink.part.timesteps.push_back(t);
      sink.part.prompts.push_back(prompt);
      sink.part.views.push_back(static_cast<int>(v));
    }
  }
  cond.finish(d);
  uncond.finish(d);
  return {std::move(cond.part), std::move(uncond.part)};
}

LossResult denoising_loss(const DenoiserParams& params, const DenoisingBatch& batch) {
  Graph graph;
  const ParamNodes nodes = bind_parameters(graph, params);
  std::vector<NodeId> terms;
  std::size_t count = 0;
  auto add_part = [&](const DenoisingBatch::Part& part, bool conditional) {
    if (part.empty()) return;
    const BranchInput input{&part.latents, &part.context, part.timesteps, part.prompts,
                            part.views};
    const NodeId eps = epsilon_branch(graph, nodes, params.spec, input, conditional);
    terms.push_back(graph.squared_error(eps, graph.constant(part.noise)));
    count += part.noise.size();
  };
  add_part(batch.conditional, true);
  add_part(batch.unconditional, false);
  if (terms.empty()) throw ContractError("denoising_loss on an empty batch");
  const NodeId total = terms.size() == 1 ? terms[0] : graph.add(terms[0], terms[1]);
  const NodeId loss = graph.scale(total, 1.0 / static_cast<double>(count));
  LossResult out;
  out.value = graph.forward(loss).item();
  const GradientMap grads = graph.backward(loss);
  for (NodeId id : nodes) out.grads.push_back(grads.at(id));
  return out;
}

DenoiserParams pretrain(const std::vector<SceneSpec>& scenes, const NoiseSchedule& schedule,
                        const PretrainConfig& config, DenoiserParams params,
                        std::vector<double>* losses) {
  if (config.steps < 1) throw ConfigError("pretrain.steps must be >= 1");
  if (scenes.empty()) throw ContractError("pretrain needs at least one scene");
  AdamConfig adam;
  adam.lr = config.lr;
  AdamW optimizer(adam);
  Rng rng(derive_seed({config.seed, 0x9e7}));
  for (int step = 0; step < config.steps; ++step) {
    const DenoisingBatch batch =
        make_denoising_batch(scenes, schedule, params.spec, config.batch, config.dropout, rng);
    LossResult res = denoising_loss(params, batch);
    if (!std::isfinite(res.value)) throw NumericError("pretraining loss became non-finite");
    optimizer.step(params.arrays, res.grads);
    if (losses) losses->push_back(res.value);
  }
  return params;
}

}  // namespace mvz
