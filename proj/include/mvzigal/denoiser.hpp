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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvzigal/dense_array.hpp"
#include "mvzigal/graph.hpp"

namespace mvz {

/// Architecture of the toy conditional noise predictor.
struct ModelSpec {
  int dim = 2;        // latent dimension d
  int views = 4;      // V
  int steps = 4;      // T, also the one-hot time embedding length
  int prompts = 16;   // rows of the prompt-embedding table
  int hidden = 64;
  int embed_dim = 8;

  // x_t, cross-view context, prompt embedding, view embedding, time one-hot.
  int input_dim() const { return 2 * dim + 2 * embed_dim + steps; }
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Order of the arrays held by DenoiserParams.
enum ParamSlot : std::size_t {
  kPromptEmbed = 0,  // [embed_dim, prompts]; column p is the embedding of prompt p
  kViewEmbed,        // [embed_dim, views]
  kHidden1Weight,
  kHidden1Bias,
  kHidden2Weight,
  kHidden2Bias,
  kOutWeight,
  kOutBias,
  kParamSlotCount,
};

/// Every learnable array of the noise predictor. Embedding tables are
/// stored transposed so a lookup is an affine map of a one-hot vector.
struct DenoiserParams {
  ModelSpec spec;
  std::vector<DenseArray> arrays;

  static DenoiserParams initialize(const ModelSpec& spec, std::uint64_t seed);
  static const std::array<const char*, kParamSlotCount>& names();

  DenseArray& operator[](std::size_t slot) { return arrays[slot]; }
  const DenseArray& operator[](std::size_t slot) const { return arrays[slot]; }
  std::size_t scalar_count() const;
  bool all_finite() const;

  friend bool operator==(const DenoiserParams&, const DenoiserParams&) = default;
};

/// Graph node ids of the parameter arrays, in ParamSlot order.
using ParamNodes = std::array<NodeId, kParamSlotCount>;

// Binds arrays as trainable parameter leaves.
ParamNodes bind_parameters(Graph& graph, const DenoiserParams& params);
// Binds arrays as constants (no gradients), e.g. the frozen snapshot.
ParamNodes bind_constants(Graph& graph, const DenoiserParams& params);

// Per-row mean of all rows, broadcast back to the input's shape.
DenseArray cross_view_context(const DenseArray& latents);

/// Inputs for one network evaluation over a batch of rows.
struct BranchInput {
  const DenseArray* latents = nullptr;  // [rows, d]
  const DenseArray* context = nullptr;  // [rows, d]
  std::span<const int> timesteps;       // one per row, 1..T
  std::span<const int> prompts;         // one per row
  std::span<const int> view_ids;        // one per row, 0-based
};

/// Conditional (prompt + view embeddings) or unconditional (both zeroed)
/// noise prediction, shape [rows, d].
NodeId epsilon_branch(Graph& graph, const ParamNodes& nodes, const ModelSpec& spec,
                      const BranchInput& input, bool conditional);

/// Classifier-free guidance, (1 - omega) * eps_uncond + omega * eps_cond.
NodeId guided_epsilon(Graph& graph, const ParamNodes& nodes, const ModelSpec& spec,
                      const BranchInput& input, double omega);

/// Guided noise prediction for all views of one prompt at timestep t.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  // latents: [V, d]. Returns the guided estimate, [V, d].
  virtual DenseArray predict(const DenseArray& latents, int t, int prompt, double omega) const = 0;
};

/// The learned predictor. Holds a reference; the params must outlive it and
/// stay unchanged while concurrent predictions run.
class Denoiser final : public NoisePredictor {
 public:
  explicit Denoiser(const DenoiserParams& params) : params_(params) {}
  DenseArray predict(const DenseArray& latents, int t, int prompt, double omega) const override;
  // The two unguided branches, for guidance checks.
  DenseArray predict_branch(const DenseArray& latents, int t, int prompt, bool conditional) const;
  const DenoiserParams& params() const { return params_; }

 private:
  const DenoiserParams& params_;
};

}  // namespace mvz
