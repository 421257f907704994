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

#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "mvzigal/dense_array.hpp"

namespace mvz {

using NodeId = std::size_t;

enum class OpKind {
  kConstant,
  kParameter,
  kAffine,
  kTanh,
  kAdd,
  kSub,
  kMul,
  kScale,
  kConcat,
  kSum,
  kMean,
  kSquaredError,
  kGaussianLogDensity,
  kSoftplus,
  kClamp,
};

std::string_view op_name(OpKind kind);

/// Reverse-mode gradients keyed by parameter node id.
class GradientMap {
 public:
  void set(NodeId id, DenseArray grad) { grads_[id] = std::move(grad); }
  const DenseArray& at(NodeId id) const;
  bool contains(NodeId id) const { return grads_.count(id) != 0; }
  std::size_t size() const { return grads_.size(); }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }

 private:
  std::map<NodeId, DenseArray> grads_;
};

/// A define-then-run computation graph over DenseArrays.
///
/// Nodes are appended in topological order: every builder method only
/// accepts ids of nodes that already exist. Leaves (constants and
/// parameters) carry a bound value that can be rebound with set_value()
/// before re-running forward(); this is what the finite-difference checks
/// rely on.
///
/// Supported shapes: affine maps take an input of shape [in] or [rows, in],
/// a weight of shape [out, in] and an optional bias of shape [out].
/// Elementwise ops require identical shapes (no broadcasting). Reductions
/// return shape {1}. Concatenation joins along the last axis.
class Graph {
 public:
  NodeId constant(DenseArray value);
  NodeId parameter(DenseArray value);

  NodeId affine(NodeId input, NodeId weight);
  NodeId affine(NodeId input, NodeId weight, NodeId bias);
  NodeId tanh(NodeId a);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId concat(std::span<const NodeId> parts);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  // sum((a - b)^2)
  NodeId squared_error(NodeId a, NodeId b);
  // log N(x | mean, stddev^2 I), summed over all entries.
  NodeId gaussian_log_density(NodeId x, NodeId mean, double stddev);
  // log(1 + exp(a)), elementwise.
  NodeId softplus(NodeId a);
  // Elementwise clamp to [lo, hi]; the gradient is zero outside the interval.
  NodeId clamp(NodeId a, double lo, double hi);

  void set_value(NodeId leaf, DenseArray value);

  /// Evaluates every node in insertion order and returns the value of
  /// `output`. Throws ShapeError naming the first malformed node.
  const DenseArray& forward(NodeId output);

  /// Gradients of the scalar `output` with respect to every parameter node.
  /// forward() must have been run since the last set_value().
  GradientMap backward(NodeId output) const;

  const DenseArray& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  std::vector<NodeId> parameters() const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    double arg0 = 0.0;
    double arg1 = 0.0;
    DenseArray value;
  };

  NodeId push(OpKind kind, std::vector<NodeId> inputs, double arg0 = 0.0, double arg1 = 0.0);
  void evaluate(NodeId id);
  void backprop(NodeId id, const DenseArray& upstream, std::vector<DenseArray>& grads,
                std::vector<bool>& touched) const;

  std::vector<Node> nodes_;
  bool evaluated_ = false;
};

/// Value-level isotropic Gaussian log-density, sum over all entries.
double gaussian_log_density(const DenseArray& x, const DenseArray& mean, double stddev);

}  // namespace mvz
