// Copyright 2026 The lprbench Authors.
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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lpr {

/// Extent of a rank-4 array in (batch, channel, height, width) order.
struct Shape4 {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t numel() const { return n * c * h * w; }
  std::string str() const;
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense row-major (n, c, h, w) array of doubles. All dimensions are >= 1.
class Tensor4 {
 public:
  Tensor4() : Tensor4(Shape4{}) {}
  explicit Tensor4(Shape4 shape, double fill = 0.0);
  Tensor4(Shape4 shape, std::vector<double> values);

  const Shape4& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }

  std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  double& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[index(n, c, h, w)];
  }
  double operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[index(n, c, h, w)];
  }
  // Bounds-checked accessor.
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  // All channels of one batch item, contiguous.
  std::span<double> sample(std::size_t n);
  std::span<const double> sample(std::size_t n) const;

  void fill(double value);
  const std::vector<double>& values() const { return data_; }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  Shape4 shape_;
  std::vector<double> data_;
};

/// Kernel, stride and zero padding of a 2-D sliding window.
struct ConvSpec {
  std::size_t kh = 1, kw = 1;
  std::size_t sh = 1, sw = 1;
  std::size_t ph = 0, pw = 0;

  void validate() const;
  // Output extent along one axis; throws DimensionError when the window
  // does not fit even once.
  std::size_t out_h(std::size_t h) const;
  std::size_t out_w(std::size_t w) const;
};

struct ConvGrads {
  Tensor4 input;
  Tensor4 weights;
  std::vector<double> bias;
};

// weights: (c_out, c_in, kh, kw). Cross-correlation, zero padding.
Tensor4 conv2d_forward(const Tensor4& input, const Tensor4& weights,
                       std::span<const double> bias, const ConvSpec& spec);
ConvGrads conv2d_backward(const Tensor4& input, const Tensor4& weights,
                          const ConvSpec& spec, const Tensor4& grad_out);

/// Flat input index of each pooled maximum, tied to the shapes that
/// produced it so that stale indices can be rejected.
struct PoolIndices {
  Shape4 input_shape;
  Shape4 output_shape;
  std::vector<std::size_t> argmax;
};

struct PoolResult {
  Tensor4 output;
  PoolIndices indices;
};

// Padded cells never win a window. Ties go to the lowest flat index.
PoolResult maxpool2d_forward(const Tensor4& input, const ConvSpec& spec);
Tensor4 maxpool2d_backward(const PoolIndices& indices, const Tensor4& grad_out);

Tensor4 add(const Tensor4& a, const Tensor4& b);
Tensor4 scale(const Tensor4& a, double factor);
Tensor4 relu_forward(const Tensor4& x);
// Derivative at zero is zero.
Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out);

void check_same_shape(const Shape4& a, const Shape4& b, const char* what);

}  // namespace lpr
