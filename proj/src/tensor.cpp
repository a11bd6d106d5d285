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

#include "lpr/tensor.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <Eigen/Core>

#include "lpr/error.hpp"

namespace lpr {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

bool is_pointwise(const ConvSpec& s) {
  return s.kh == 1 && s.kw == 1 && s.sh == 1 && s.sw == 1 && s.ph == 0 && s.pw == 0;
}

// Unfolds one sample (c, h, w) into a (c*kh*kw) x (oh*ow) patch matrix.
void im2col(const double* src, std::size_t c, std::size_t h, std::size_t w,
            const ConvSpec& s, std::size_t oh, std::size_t ow, double* col) {
  const std::size_t n_cols = oh * ow;
  for (std::size_t ci = 0; ci < c; ++ci) {
    const double* plane = src + ci * h * w;
    for (std::size_t i = 0; i < s.kh; ++i) {
      for (std::size_t j = 0; j < s.kw; ++j) {
        double* row = col + ((ci * s.kh + i) * s.kw + j) * n_cols;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * s.sh + i) -
                                   static_cast<std::ptrdiff_t>(s.ph);
          double* out = row + oy * ow;
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(out, out + ow, 0.0);
            continue;
          }
          const double* line = plane + static_cast<std::size_t>(y) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * s.sw + j) -
                                     static_cast<std::ptrdiff_t>(s.pw);
            out[ox] = (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) ? 0.0 : line[x];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters patch gradients back onto the (c, h, w) map.
void col2im(const double* col, std::size_t c, std::size_t h, std::size_t w,
            const ConvSpec& s, std::size_t oh, std::size_t ow, double* dst) {
  const std::size_t n_cols = oh * ow;
  for (std::size_t ci = 0; ci < c; ++ci) {
    double* plane = dst + ci * h * w;
    for (std::size_t i = 0; i < s.kh; ++i) {
      for (std::size_t j = 0; j < s.kw; ++j) {
        const double* row = col + ((ci * s.kh + i) * s.kw + j) * n_cols;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * s.sh + i) -
                                   static_cast<std::ptrdiff_t>(s.ph);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
          double* line = plane + static_cast<std::size_t>(y) * w;
          const double* in = row + oy * ow;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * s.sw + j) -
                                     static_cast<std::ptrdiff_t>(s.pw);
            if (x >= 0 && x < static_cast<std::ptrdiff_t>(w)) line[x] += in[ox];
          }
        }
      }
    }
  }
}

void check_conv_operands(const Tensor4& input, const Tensor4& weights,
                         const ConvSpec& spec) {
  spec.validate();
  const Shape4& in = input.shape();
  const Shape4& wt = weights.shape();
  if (wt.c != in.c) {
    std::ostringstream msg;
    msg << "channel axis: input has " << in.c << " channels, weights expect " << wt.c;
    throw DimensionError(msg.str());
  }
  if (wt.h != spec.kh || wt.w != spec.kw) {
    std::ostringstream msg;
    msg << "kernel axes: weights are " << wt.h << "x" << wt.w << ", spec says "
        << spec.kh << "x" << spec.kw;
    throw DimensionError(msg.str());
  }
}

}  // namespace

std::string Shape4::str() const {
  std::ostringstream out;
  out << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return out.str();
}

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape) {
  if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0) {
    throw DimensionError("tensor dimensions must be >= 1, got " + shape.str());
  }
  data_.assign(shape.numel(), fill);
}

Tensor4::Tensor4(Shape4 shape, std::vector<double> values) : shape_(shape) {
  if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0) {
    throw DimensionError("tensor dimensions must be >= 1, got " + shape.str());
  }
  if (values.size() != shape.numel()) {
    throw DimensionError("data length " + std::to_string(values.size()) +
                         " does not match shape " + shape.str());
  }
  data_ = std::move(values);
}

double Tensor4::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
  if (n >= shape_.n) throw DimensionError("batch index out of range");
  if (c >= shape_.c) throw DimensionError("channel index out of range");
  if (h >= shape_.h) throw DimensionError("row index out of range");
  if (w >= shape_.w) throw DimensionError("column index out of range");
  return (*this)(n, c, h, w);
}

std::span<double> Tensor4::sample(std::size_t n) {
  const std::size_t len = shape_.c * shape_.h * shape_.w;
  return std::span<double>(data_).subspan(n * len, len);
}

std::span<const double> Tensor4::sample(std::size_t n) const {
  const std::size_t len = shape_.c * shape_.h * shape_.w;
  return std::span<const double>(data_).subspan(n * len, len);
}

void Tensor4::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void ConvSpec::validate() const {
  if (kh == 0 || kw == 0) throw ParameterError("kernel extents must be >= 1");
  if (sh == 0 || sw == 0) throw ParameterError("strides must be >= 1");
}

std::size_t ConvSpec::out_h(std::size_t h) const {
  if (h + 2 * ph < kh) {
    throw DimensionError("height axis: window " + std::to_string(kh) +
                         " exceeds padded height " + std::to_string(h + 2 * ph));
  }
  return (h + 2 * ph - kh) / sh + 1;
}

std::size_t ConvSpec::out_w(std::size_t w) const {
  if (w + 2 * pw < kw) {
    throw DimensionError("width axis: window " + std::to_string(kw) +
                         " exceeds padded width " + std::to_string(w + 2 * pw));
  }
  return (w + 2 * pw - kw) / sw + 1;
}

void check_same_shape(const Shape4& a, const Shape4& b, const char* what) {
  if (a == b) return;
  const char* axis = a.n != b.n ? "batch" : a.c != b.c ? "channel" : a.h != b.h ? "height" : "width";
  throw DimensionError(std::string(what) + ": " + axis + " axis differs, " + a.str() +
                       " vs " + b.str());
}

Tensor4 conv2d_forward(const Tensor4& input, const Tensor4& weights,
                       std::span<const double> bias, const ConvSpec& spec) {
  check_conv_operands(input, weights, spec);
  const Shape4& in = input.shape();
  const std::size_t c_out = weights.shape().n;
  if (bias.size() != c_out) {
    throw DimensionError("bias length " + std::to_string(bias.size()) +
                         " does not match output channels " + std::to_string(c_out));
  }
  const std::size_t oh = spec.out_h(in.h);
  const std::size_t ow = spec.out_w(in.w);
  const std::size_t k = in.c * spec.kh * spec.kw;
  const std::size_t cols = oh * ow;

  Tensor4 out(Shape4{in.n, c_out, oh, ow});
  ConstRowMap w_mat(weights.data().data(), c_out, k);
  Eigen::Map<const Eigen::VectorXd> b_vec(bias.data(), c_out);
  std::vector<double> col;
  if (!is_pointwise(spec)) col.resize(k * cols);

  for (std::size_t n = 0; n < in.n; ++n) {
    const double* src = input.sample(n).data();
    if (!is_pointwise(spec)) {
      im2col(src, in.c, in.h, in.w, spec, oh, ow, col.data());
      src = col.data();
    }
    ConstRowMap col_mat(src, k, cols);
    RowMap o_mat(out.sample(n).data(), c_out, cols);
    o_mat.noalias() = w_mat * col_mat;
    o_mat.colwise() += b_vec;
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor4& input, const Tensor4& weights,
                          const ConvSpec& spec, const Tensor4& grad_out) {
  check_conv_operands(input, weights, spec);
  const Shape4& in = input.shape();
  const std::size_t c_out = weights.shape().n;
  const std::size_t oh = spec.out_h(in.h);
  const std::size_t ow = spec.out_w(in.w);
  check_same_shape(grad_out.shape(), Shape4{in.n, c_out, oh, ow}, "conv2d_backward grad_out");
  const std::size_t k = in.c * spec.kh * spec.kw;
  const std::size_t cols = oh * ow;

  ConvGrads g{Tensor4(in), Tensor4(weights.shape()), std::vector<double>(c_out, 0.0)};
  ConstRowMap w_mat(weights.data().data(), c_out, k);
  RowMap gw_mat(g.weights.data().data(), c_out, k);
  const bool pointwise = is_pointwise(spec);
  std::vector<double> col;
  std::vector<double> grad_col;
  if (!pointwise) {
    col.resize(k * cols);
    grad_col.resize(k * cols);
  }

  for (std::size_t n = 0; n < in.n; ++n) {
    const double* src = input.sample(n).data();
    if (!pointwise) {
      im2col(src, in.c, in.h, in.w, spec, oh, ow, col.data());
      src = col.data();
    }
    ConstRowMap col_mat(src, k, cols);
    ConstRowMap go_mat(grad_out.sample(n).data(), c_out, cols);
    gw_mat.noalias() += go_mat * col_mat.transpose();
    // Plain loop: Eigen's vectorised reduction order depends on heap alignment.
    for (std::size_t c = 0; c < c_out; ++c) {
      const double* row = go_mat.data() + c * cols;
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += row[j];
      g.bias[c] += s;
    }

    double* gx = g.input.sample(n).data();
    if (pointwise) {
      RowMap(gx, k, cols).noalias() = w_mat.transpose() * go_mat;
    } else {
      RowMap(grad_col.data(), k, cols).noalias() = w_mat.transpose() * go_mat;
      std::fill(gx, gx + in.c * in.h * in.w, 0.0);
      col2im(grad_col.data(), in.c, in.h, in.w, spec, oh, ow, gx);
    }
  }
  return g;
}

PoolResult maxpool2d_forward(const Tensor4& input, const ConvSpec& spec) {
  spec.validate();
  if (spec.ph >= spec.kh || spec.pw >= spec.kw) {
    throw ParameterError("pool padding must be smaller than the window");
  }
  const Shape4& in = input.shape();
  const std::size_t oh = spec.out_h(in.h);
  const std::size_t ow = spec.out_w(in.w);
  PoolResult r{Tensor4(Shape4{in.n, in.c, oh, ow}), PoolIndices{}};
  r.indices.input_shape = in;
  r.indices.output_shape = r.output.shape();
  r.indices.argmax.resize(r.output.numel());

  const auto& x = input.values();
  auto out = r.output.data();
  std::size_t o = 0;
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t c = 0; c < in.c; ++c) {
      const std::size_t plane = (n * in.c + c) * in.h * in.w;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        const std::ptrdiff_t y0 = static_cast<std::ptrdiff_t>(oy * spec.sh) -
                                  static_cast<std::ptrdiff_t>(spec.ph);
        const std::size_t ylo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(y0, 0));
        const std::size_t yhi = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(y0 + static_cast<std::ptrdiff_t>(spec.kh),
                                     static_cast<std::ptrdiff_t>(in.h)));
        for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
          const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(ox * spec.sw) -
                                    static_cast<std::ptrdiff_t>(spec.pw);
          const std::size_t xlo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(x0, 0));
          const std::size_t xhi = static_cast<std::size_t>(
              std::min<std::ptrdiff_t>(x0 + static_cast<std::ptrdiff_t>(spec.kw),
                                       static_cast<std::ptrdiff_t>(in.w)));
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = plane + ylo * in.w + xlo;
          for (std::size_t y = ylo; y < yhi; ++y) {
            for (std::size_t xx = xlo; xx < xhi; ++xx) {
              const std::size_t idx = plane + y * in.w + xx;
              const bool better = x[idx] > best;
              best = better ? x[idx] : best;
              best_idx = better ? idx : best_idx;
            }
          }
          out[o] = best;
          r.indices.argmax[o] = best_idx;
        }
      }
    }
  }
  return r;
}

Tensor4 maxpool2d_backward(const PoolIndices& indices, const Tensor4& grad_out) {
  check_same_shape(grad_out.shape(), indices.output_shape, "maxpool2d_backward grad_out");
  if (indices.argmax.size() != grad_out.numel()) {
    throw DimensionError("maxpool2d_backward: index count does not match grad_out");
  }
  Tensor4 grad_in(indices.input_shape);
  auto gi = grad_in.data();
  auto go = grad_out.data();
  for (std::size_t o = 0; o < go.size(); ++o) gi[indices.argmax[o]] += go[o];
  return grad_in;
}

Tensor4 add(const Tensor4& a, const Tensor4& b) {
  check_same_shape(a.shape(), b.shape(), "add");
  Tensor4 out(a);
  auto o = out.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += y[i];
  return out;
}

Tensor4 scale(const Tensor4& a, double factor) {
  Tensor4 out(a);
  for (double& v : out.data()) v *= factor;
  return out;
}

Tensor4 relu_forward(const Tensor4& x) {
  Tensor4 out(x);
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor4 relu_backward(const Tensor4& x, const Tensor4& grad_out) {
  check_same_shape(x.shape(), grad_out.shape(), "relu_backward");
  Tensor4 out(grad_out);
  auto o = out.data();
  auto xv = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (!(xv[i] > 0.0)) o[i] = 0.0;
  }
  return out;
}

}  // namespace lpr
