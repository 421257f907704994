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

#include "mvzigal/dense_array.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "mvzigal/errors.hpp"

namespace mvz {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

DenseArray::DenseArray(Shape shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty() || std::find(shape_.begin(), shape_.end(), 0) != shape_.end()) {
    throw ShapeError("array shape must be non-empty with positive extents, got " +
                     shape_to_string(shape_));
  }
  data_.assign(shape_size(shape_), fill);
}

DenseArray::DenseArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty() || std::find(shape_.begin(), shape_.end(), 0) != shape_.end()) {
    throw ShapeError("array shape must be non-empty with positive extents, got " +
                     shape_to_string(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_to_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

DenseArray DenseArray::vector(std::initializer_list<double> values) {
  return vector(std::vector<double>(values));
}

DenseArray DenseArray::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return DenseArray(Shape{n}, std::move(values));
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return DenseArray(Shape{rows, cols}, std::move(values));
}

double DenseArray::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on array of shape " + shape_to_string(shape_));
  }
  return data_[0];
}

bool DenseArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void DenseArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

}  // namespace mvz
