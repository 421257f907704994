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

#include "mvzigal/denoiser.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mvzigal/errors.hpp"
#include "mvzigal/rng.hpp"

namespace mvz {

void ModelSpec::validate() const {
  if (dim < 2) throw ConfigError("model.dim must be >= 2");
  if (views < 1) throw ConfigError("model.views must be >= 1");
  if (steps < 2 || steps > 16) throw ConfigError("model.steps must lie in [2, 16]");
  if (prompts < 1) throw ConfigError("model.prompts must be >= 1");
  if (hidden < 1 || embed_dim < 1) throw ConfigError("model widths must be positive");
}

const std::array<const char*, kParamSlotCount>& DenoiserParams::names() {
  static const std::array<const char*, kParamSlotCount> kNames = {
      "embed.prompt", "embed.view", "hidden1.weight", "hidden1.bias",
      "hidden2.weight", "hidden2.bias", "out.weight", "out.bias"};
  return kNames;
}

DenoiserParams DenoiserParams::initialize(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed({seed, 0x1417}));
  auto uniform = [&](Shape shape, double bound) {
    DenseArray a(std::move(shape));
    for (double& v : a.storage()) v = rng.uniform(-bound, bound);
    return a;
  };
  auto glorot = [&](std::size_t out, std::size_t in) {
    return uniform(Shape{out, in}, std::sqrt(6.0 / static_cast<double>(in + out)));
  };
  const auto e = static_cast<std::size_t>(spec.embed_dim);
  const auto h = static_cast<std::size_t>(spec.hidden);
  const auto d = static_cast<std::size_t>(spec.dim);
  DenoiserParams p;
  p.spec = spec;
  p.arrays.resize(kParamSlotCount);
  p.arrays[kPromptEmbed] = uniform(Shape{e, static_cast<std::size_t>(spec.prompts)}, 1.0);
  p.arrays[kViewEmbed] = uniform(Shape{e, static_cast<std::size_t>(spec.views)}, 1.0);
  p.arrays[kHidden1Weight] = glorot(h, static_cast<std::size_t>(spec.input_dim()));
  p.arrays[kHidden1Bias] = DenseArray(Shape{h}, 0.0);
  p.arrays[kHidden2Weight] = glorot(h, h);
  p.arrays[kHidden2Bias] = DenseArray(Shape{h}, 0.0);
  p.arrays[kOutWeight] = glorot(d, h);
  p.arrays[kOutBias] = DenseArray(Shape{d}, 0.0);
  return p;
}

std::size_t DenoiserParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& a : arrays) n += a.size();
  return n;
}

bool DenoiserParams::all_finite() const {
  for (const auto& a : arrays) {
    if (!a.all_finite()) return false;
  }
  return true;
}

ParamNodes bind_parameters(Graph& graph, const DenoiserParams& params) {
  ParamNodes nodes{};
  for (std::size_t i = 0; i < kParamSlotCount; ++i) nodes[i] = graph.parameter(params.arrays[i]);
  return nodes;
}

ParamNodes bind_constants(Graph& graph, const DenoiserParams& params) {
  ParamNodes nodes{};
  for (std::size_t i = 0; i < kParamSlotCount; ++i) nodes[i] = graph.constant(params.arrays[i]);
  return nodes;
}

DenseArray cross_view_context(const DenseArray& latents) {
  const std::size_t rows = latents.rows();
  const std::size_t cols = latents.cols();
  std::vector<double> mean(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) mean[c] += latents.at(r, c);
  }
  for (double& m : mean) m /= static_cast<double>(rows);
  DenseArray ctx(latents.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) ctx.at(r, c) = mean[c];
  }
  return ctx;
}

namespace {

DenseArray one_hot_rows(std::span<const int> ids, int width, bool active, const char* what) {
  DenseArray out(Shape{ids.size(), static_cast<std::size_t>(width)}, 0.0);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= width) {
      throw LookupError(std::string("unknown ") + what + " id " + std::to_string(ids[r]) +
                        " (table has " + std::to_string(width) + " rows)");
    }
    if (active) out.at(r, static_cast<std::size_t>(ids[r])) = 1.0;
  }
  return out;
}

}  // namespace

NodeId epsilon_branch(Graph& graph, const ParamNodes& nodes, const ModelSpec& spec,
                      const BranchInput& input, bool conditional) {
  const std::size_t rows = input.latents->rows();
  if (input.latents->rank() != 2 || input.latents->cols() != static_cast<std::size_t>(spec.dim) ||
      input.context->shape() != input.latents->shape() || input.timesteps.size() != rows ||
      input.prompts.size() != rows || input.view_ids.size() != rows) {
    throw ShapeError("epsilon_branch: inconsistent branch input for " + std::to_string(rows) +
                     " rows");
  }
  std::vector<int> time_index(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (input.timesteps[r] < 1 || input.timesteps[r] > spec.steps) {
      throw ContractError("timestep " + std::to_string(input.timesteps[r]) + " outside [1, " +
                          std::to_string(spec.steps) + "]");
    }
    time_index[r] = input.timesteps[r] - 1;
  }

  const NodeId x = graph.constant(*input.latents);
  const NodeId ctx = graph.constant(*input.context);
  const NodeId prompt_hot =
      graph.constant(one_hot_rows(input.prompts, spec.prompts, conditional, "prompt"));
  const NodeId view_hot =
      graph.constant(one_hot_rows(input.view_ids, spec.views, conditional, "view"));
  const NodeId time_hot = graph.constant(one_hot_rows(time_index, spec.steps, true, "timestep"));

  const NodeId prompt_emb = graph.affine(prompt_hot, nodes[kPromptEmbed]);
  const NodeId view_emb = graph.affine(view_hot, nodes[kViewEmbed]);
  const std::array<NodeId, 5> parts = {x, ctx, prompt_emb, view_emb, time_hot};
  const NodeId h0 = graph.concat(parts);
  const NodeId h1 = graph.tanh(graph.affine(h0, nodes[kHidden1Weight], nodes[kHidden1Bias]));
  const NodeId h2 = graph.tanh(graph.affine(h1, nodes[kHidden2Weight], nodes[kHidden2Bias]));
  return graph.affine(h2, nodes[kOutWeight], nodes[kOutBias]);
}

NodeId guided_epsilon(Graph& graph, const ParamNodes& nodes, const ModelSpec& spec,
                      const BranchInput& input, double omega) {
  if (!(omega >= 0.0)) throw DomainError("guidance scale must be >= 0");
  const NodeId cond = epsilon_branch(graph, nodes, spec, input, true);
  const NodeId uncond = epsilon_branch(graph, nodes, spec, input, false);
  return graph.add(graph.scale(uncond, 1.0 - omega), graph.scale(cond, omega));
}

namespace {

struct ViewBatch {
  std::vector<int> timesteps;
  std::vector<int> prompts;
  std::vector<int> views;
  DenseArray context;
};

ViewBatch view_batch(const DenseArray& latents, int t, int prompt) {
  const std::size_t rows = latents.rows();
  ViewBatch b;
  b.timesteps.assign(rows, t);
  b.prompts.assign(rows, prompt);
  b.views.resize(rows);
  std::iota(b.views.begin(), b.views.end(), 0);
  b.context = cross_view_context(latents);
  return b;
}

}  // namespace

DenseArray Denoiser::predict(const DenseArray& latents, int t, int prompt, double omega) const {
  ViewBatch b = view_batch(latents, t, prompt);
  Graph graph;
  const ParamNodes nodes = bind_constants(graph, params_);
  const BranchInput input{&latents, &b.context, b.timesteps, b.prompts, b.views};
  const NodeId out = guided_epsilon(graph, nodes, params_.spec, input, omega);
  return graph.forward(out);
}

DenseArray Denoiser::predict_branch(const DenseArray& latents, int t, int prompt,
                                    bool conditional) const {
  ViewBatch b = view_batch(latents, t, prompt);
  Graph graph;
  const ParamNodes nodes = bind_constants(graph, params_);
  const BranchInput input{&latents, &b.context, b.timesteps, b.prompts, b.views};
  const NodeId out = epsilon_branch(graph, nodes, params_.spec, input, conditional);
  return graph.forward(out);
}

}  // namespace mvz
