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

#include "mvzigal/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mvzigal/errors.hpp"

namespace mvz {

namespace {

[[noreturn]] void shape_fail(NodeId id, OpKind kind, const std::string& what) {
  throw ShapeError("node " + std::to_string(id) + " (" + std::string(op_name(kind)) +
                   "): " + what);
}

void accumulate(DenseArray& into, const DenseArray& delta) {
  auto dst = into.data();
  auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kAffine: return "affine";
    case OpKind::kTanh: return "tanh";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kConcat: return "concat";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSquaredError: return "squared_error";
    case OpKind::kGaussianLogDensity: return "gaussian_log_density";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kClamp: return "clamp";
  }
  return "unknown";
}

const DenseArray& GradientMap::at(NodeId id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) {
    throw ContractError("node " + std::to_string(id) + " is not a parameter of the graph");
  }
  return it->second;
}

NodeId Graph::push(OpKind kind, std::vector<NodeId> inputs, double arg0, double arg1) {
  const NodeId id = nodes_.size();
  for (NodeId in : inputs) {
    if (in >= id) {
      throw ContractError("node " + std::to_string(id) + " (" + std::string(op_name(kind)) +
                          ") references node " + std::to_string(in) + " that does not exist yet");
    }
  }
  nodes_.push_back(Node{kind, std::move(inputs), arg0, arg1, DenseArray()});
  evaluated_ = false;
  return id;
}

NodeId Graph::constant(DenseArray value) {
  const NodeId id = push(OpKind::kConstant, {});
  nodes_[id].value = std::move(value);
  return id;
}

NodeId Graph::parameter(DenseArray value) {
  const NodeId id = push(OpKind::kParameter, {});
  nodes_[id].value = std::move(value);
  return id;
}

NodeId Graph::affine(NodeId input, NodeId weight) { return push(OpKind::kAffine, {input, weight}); }
NodeId Graph::affine(NodeId input, NodeId weight, NodeId bias) {
  return push(OpKind::kAffine, {input, weight, bias});
}
NodeId Graph::tanh(NodeId a) { return push(OpKind::kTanh, {a}); }
NodeId Graph::add(NodeId a, NodeId b) { return push(OpKind::kAdd, {a, b}); }
NodeId Graph::sub(NodeId a, NodeId b) { return push(OpKind::kSub, {a, b}); }
NodeId Graph::mul(NodeId a, NodeId b) { return push(OpKind::kMul, {a, b}); }
NodeId Graph::scale(NodeId a, double factor) { return push(OpKind::kScale, {a}, factor); }
NodeId Graph::concat(std::span<const NodeId> parts) {
  if (parts.empty()) throw ContractError("concat of zero parts");
  return push(OpKind::kConcat, std::vector<NodeId>(parts.begin(), parts.end()));
}
NodeId Graph::sum(NodeId a) { return push(OpKind::kSum, {a}); }
NodeId Graph::mean(NodeId a) { return push(OpKind::kMean, {a}); }
NodeId Graph::squared_error(NodeId a, NodeId b) { return push(OpKind::kSquaredError, {a, b}); }
NodeId Graph::gaussian_log_density(NodeId x, NodeId mean, double stddev) {
  if (!(stddev > 0.0)) {
    throw DomainError("gaussian_log_density requires stddev > 0, got " + std::to_string(stddev));
  }
  return push(OpKind::kGaussianLogDensity, {x, mean}, stddev);
}
NodeId Graph::softplus(NodeId a) { return push(OpKind::kSoftplus, {a}); }
NodeId Graph::clamp(NodeId a, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp with lo > hi");
  return push(OpKind::kClamp, {a}, lo, hi);
}

void Graph::set_value(NodeId leaf, DenseArray value) {
  Node& node = nodes_.at(leaf);
  if (node.kind != OpKind::kConstant && node.kind != OpKind::kParameter) {
    throw ContractError("set_value on non-leaf node " + std::to_string(leaf));
  }
  node.value = std::move(value);
  evaluated_ = false;
}

const DenseArray& Graph::value(NodeId id) const { return nodes_.at(id).value; }

std::vector<NodeId> Graph::parameters() const {
  std::vector<NodeId> out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].kind == OpKind::kParameter) out.push_back(id);
  }
  return out;
}

const DenseArray& Graph::forward(NodeId output) {
  if (output >= nodes_.size()) throw ContractError("forward on unknown node");
  for (NodeId id = 0; id < nodes_.size(); ++id) evaluate(id);
  evaluated_ = true;
  return nodes_[output].value;
}

void Graph::evaluate(NodeId id) {
  Node& n = nodes_[id];
  auto in = [&](std::size_t k) -> const DenseArray& { return nodes_[n.inputs[k]].value; };
  auto same_shape = [&](const DenseArray& a, const DenseArray& b) {
    if (a.shape() != b.shape()) {
      shape_fail(id, n.kind,
                 "operand shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " differ");
    }
  };

  switch (n.kind) {
    case OpKind::kConstant:
    case OpKind::kParameter:
      return;
    case OpKind::kAffine: {
      const DenseArray& x = in(0);
      const DenseArray& w = in(1);
      if (w.rank() != 2) shape_fail(id, n.kind, "weight must be rank 2");
      if (x.rank() > 2) shape_fail(id, n.kind, "input must be rank 1 or 2");
      const std::size_t out_dim = w.shape()[0];
      const std::size_t in_dim = w.shape()[1];
      if (x.cols() != in_dim) {
        shape_fail(id, n.kind,
                   "input " + shape_to_string(x.shape()) + " incompatible with weight " +
                       shape_to_string(w.shape()));
      }
      const bool has_bias = n.inputs.size() == 3;
      if (has_bias && in(2).shape() != Shape{out_dim}) {
        shape_fail(id, n.kind, "bias must have shape [" + std::to_string(out_dim) + "]");
      }
      const std::size_t rows = x.rows();
      DenseArray y(x.rank() == 1 ? Shape{out_dim} : Shape{rows, out_dim});
      const double* xd = x.data().data();
      const double* wd = w.data().data();
      double* yd = y.data().data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xd + r * in_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
          double acc = has_bias ? in(2)[o] : 0.0;
          const double* wo = wd + o * in_dim;
          for (std::size_t i = 0; i < in_dim; ++i) acc += wo[i] * xr[i];
          yd[r * out_dim + o] = acc;
        }
      }
      n.value = std::move(y);
      return;
    }
    case OpKind::kTanh: {
      DenseArray y = in(0);
      for (double& v : y.storage()) v = std::tanh(v);
      n.value = std::move(y);
      return;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      const DenseArray& a = in(0);
      const DenseArray& b = in(1);
      same_shape(a, b);
      DenseArray y(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) {
        y[i] = n.kind == OpKind::kAdd   ? a[i] + b[i]
               : n.kind == OpKind::kSub ? a[i] - b[i]
                                        : a[i] * b[i];
      }
      n.value = std::move(y);
      return;
    }
    case OpKind::kScale: {
      DenseArray y = in(0);
      for (double& v : y.storage()) v *= n.arg0;
      n.value = std::move(y);
      return;
    }
    case OpKind::kConcat: {
      const DenseArray& first = in(0);
      const std::size_t rank = first.rank();
      if (rank > 2) shape_fail(id, n.kind, "parts must be rank 1 or 2");
      const std::size_t rows = first.rows();
      std::size_t total = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const DenseArray& p = in(k);
        if (p.rank() != rank || p.rows() != rows) {
          shape_fail(id, n.kind,
                     "part " + std::to_string(k) + " has shape " + shape_to_string(p.shape()) +
                         ", expected leading extent " + std::to_string(rows));
        }
        total += p.cols();
      }
      DenseArray y(rank == 1 ? Shape{total} : Shape{rows, total});
      for (std::size_t r = 0; r < rows; ++r) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          auto src = in(k).row(r);
          for (std::size_t c = 0; c < src.size(); ++c) y.at(r, offset + c) = src[c];
          offset += src.size();
        }
      }
      n.value = std::move(y);
      return;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      const DenseArray& a = in(0);
      double acc = 0.0;
      for (double v : a.data()) acc += v;
      if (n.kind == OpKind::kMean) acc /= static_cast<double>(a.size());
      n.value = DenseArray::scalar(acc);
      return;
    }
    case OpKind::kSquaredError: {
      const DenseArray& a = in(0);
      const DenseArray& b = in(1);
      same_shape(a, b);
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
      }
      n.value = DenseArray::scalar(acc);
      return;
    }
    case OpKind::kGaussianLogDensity: {
      same_shape(in(0), in(1));
      n.value = DenseArray::scalar(mvz::gaussian_log_density(in(0), in(1), n.arg0));
      return;
    }
    case OpKind::kSoftplus: {
      DenseArray y = in(0);
      for (double& v : y.storage()) v = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
      n.value = std::move(y);
      return;
    }
    case OpKind::kClamp: {
      DenseArray y = in(0);
      for (double& v : y.storage()) v = std::clamp(v, n.arg0, n.arg1);
      n.value = std::move(y);
      return;
    }
  }
}

GradientMap Graph::backward(NodeId output) const {
  if (!evaluated_) throw ContractError("backward called before forward");
  if (output >= nodes_.size()) throw ContractError("backward on unknown node");
  if (nodes_[output].value.size() != 1) {
    throw ContractError("backward requires a scalar output, node " + std::to_string(output) +
                        " has shape " + shape_to_string(nodes_[output].value.shape()));
  }
  std::vector<DenseArray> grads(nodes_.size());
  std::vector<bool> touched(nodes_.size(), false);
  grads[output] = DenseArray::scalar(1.0);
  touched[output] = true;
  for (NodeId id = output + 1; id-- > 0;) {
    if (!touched[id]) continue;
    backprop(id, grads[id], grads, touched);
  }
  GradientMap out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].kind != OpKind::kParameter) continue;
    out.set(id, touched[id] ? grads[id] : DenseArray(nodes_[id].value.shape(), 0.0));
  }
  return out;
}

void Graph::backprop(NodeId id, const DenseArray& g, std::vector<DenseArray>& grads,
                     std::vector<bool>& touched) const {
  const Node& n = nodes_[id];
  auto in = [&](std::size_t k) -> const DenseArray& { return nodes_[n.inputs[k]].value; };
  // Adds `delta` into the gradient of input k; fan-out accumulates here.
  auto push_grad = [&](std::size_t k, DenseArray delta) {
    const NodeId target = n.inputs[k];
    if (!touched[target]) {
      grads[target] = std::move(delta);
      touched[target] = true;
    } else {
      accumulate(grads[target], delta);
    }
  };

  switch (n.kind) {
    case OpKind::kConstant:
    case OpKind::kParameter:
      return;
    case OpKind::kAffine: {
      const DenseArray& x = in(0);
      const DenseArray& w = in(1);
      const std::size_t out_dim = w.shape()[0];
      const std::size_t in_dim = w.shape()[1];
      const std::size_t rows = x.rows();
      DenseArray dx(x.shape(), 0.0);
      DenseArray dw(w.shape(), 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double go = g[r * out_dim + o];
          if (go == 0.0) continue;
          for (std::size_t i = 0; i < in_dim; ++i) {
            dx[r * in_dim + i] += go * w[o * in_dim + i];
            dw[o * in_dim + i] += go * x[r * in_dim + i];
          }
        }
      }
      if (n.inputs.size() == 3) {
        DenseArray db(Shape{out_dim}, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t o = 0; o < out_dim; ++o) db[o] += g[r * out_dim + o];
        }
        push_grad(2, std::move(db));
      }
      push_grad(0, std::move(dx));
      push_grad(1, std::move(dw));
      return;
    }
    case OpKind::kTanh: {
      DenseArray d = g;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double y = n.value[i];
        d[i] *= 1.0 - y * y;
      }
      push_grad(0, std::move(d));
      return;
    }
    case OpKind::kAdd:
      push_grad(0, g);
      push_grad(1, g);
      return;
    case OpKind::kSub: {
      DenseArray neg = g;
      for (double& v : neg.storage()) v = -v;
      push_grad(0, g);
      push_grad(1, std::move(neg));
      return;
    }
    case OpKind::kMul: {
      DenseArray da = g;
      DenseArray db = g;
      for (std::size_t i = 0; i < g.size(); ++i) {
        da[i] *= in(1)[i];
        db[i] *= in(0)[i];
      }
      push_grad(0, std::move(da));
      push_grad(1, std::move(db));
      return;
    }
    case OpKind::kScale: {
      DenseArray d = g;
      for (double& v : d.storage()) v *= n.arg0;
      push_grad(0, std::move(d));
      return;
    }
    case OpKind::kConcat: {
      const std::size_t rows = in(0).rows();
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        DenseArray part(in(k).shape(), 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < part.cols(); ++c) part.at(r, c) = g.at(r, offset + c);
        }
        offset += part.cols();
        push_grad(k, std::move(part));
      }
      return;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      const DenseArray& a = in(0);
      const double scale = n.kind == OpKind::kMean ? g[0] / static_cast<double>(a.size()) : g[0];
      push_grad(0, DenseArray(a.shape(), scale));
      return;
    }
    case OpKind::kSquaredError: {
      const DenseArray& a = in(0);
      const DenseArray& b = in(1);
      DenseArray da(a.shape());
      DenseArray db(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = 2.0 * (a[i] - b[i]) * g[0];
        da[i] = d;
        db[i] = -d;
      }
      push_grad(0, std::move(da));
      push_grad(1, std::move(db));
      return;
    }
    case OpKind::kGaussianLogDensity: {
      const DenseArray& x = in(0);
      const DenseArray& m = in(1);
      const double inv_var = 1.0 / (n.arg0 * n.arg0);
      DenseArray dx(x.shape());
      DenseArray dm(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = (x[i] - m[i]) * inv_var * g[0];
        dx[i] = -r;
        dm[i] = r;
      }
      push_grad(0, std::move(dx));
      push_grad(1, std::move(dm));
      return;
    }
    case OpKind::kSoftplus: {
      DenseArray d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= sigmoid(in(0)[i]);
      push_grad(0, std::move(d));
      return;
    }
    case OpKind::kClamp: {
      DenseArray d = g;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double v = in(0)[i];
        if (v < n.arg0 || v > n.arg1) d[i] = 0.0;
      }
      push_grad(0, std::move(d));
      return;
    }
  }
}

double gaussian_log_density(const DenseArray& x, const DenseArray& mean, double stddev) {
  if (!(stddev > 0.0)) {
    throw DomainError("gaussian_log_density requires stddev > 0, got " + std::to_string(stddev));
  }
  if (x.shape() != mean.shape()) {
    throw ShapeError("gaussian_log_density: shapes " + shape_to_string(x.shape()) + " and " +
                     shape_to_string(mean.shape()) + " differ");
  }
  const double var = stddev * stddev;
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean[i];
    sq += d * d;
  }
  const double n = static_cast<double>(x.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * var) - sq / (2.0 * var);
}

}  // namespace mvz
