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

#include "lpr/layers.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "lpr/error.hpp"

namespace lpr {

// ---------------------------------------------------------------------------
// Batch normalization

BatchNormState::BatchNormState(std::size_t channels)
    : gamma(channels, 1.0),
      beta(channels, 0.0),
      running_mean(channels, 0.0),
      running_var(channels, 1.0) {}

BatchNormResult batchnorm_forward(Tensor4 input, BatchNormState& state, Mode mode) {
  const Shape4 s = input.shape();
  if (state.gamma.size() != s.c || state.beta.size() != s.c ||
      state.running_mean.size() != s.c || state.running_var.size() != s.c) {
    throw DimensionError("batchnorm: channel axis has " + std::to_string(s.c) +
                         " channels, state has " + std::to_string(state.gamma.size()));
  }
  const std::size_t plane = s.h * s.w;
  const std::size_t count = s.n * plane;
  if (mode == Mode::train && count < 2) {
    throw ParameterError("batchnorm: train mode needs batch*h*w >= 2");
  }

  BatchNormResult r{std::move(input), BatchNormCache{}};
  r.cache.mode = mode;
  r.cache.x_hat = Tensor4(s);
  r.cache.inv_std.resize(s.c);
  r.cache.gamma = state.gamma;

  // Output overwrites the input buffer in place.
  auto x = r.output.data();
  auto y = r.output.data();
  auto xh = r.cache.x_hat.data();
  for (std::size_t c = 0; c < s.c; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::train) {
      for (std::size_t n = 0; n < s.n; ++n) {
        const double* p = x.data() + (n * s.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) mean += p[i];
      }
      mean /= static_cast<double>(count);
      for (std::size_t n = 0; n < s.n; ++n) {
        const double* p = x.data() + (n * s.c + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) var += (p[i] - mean) * (p[i] - mean);
      }
      var /= static_cast<double>(count);
      state.running_mean[c] = state.momentum * state.running_mean[c] + (1.0 - state.momentum) * mean;
      state.running_var[c] = state.momentum * state.running_var[c] + (1.0 - state.momentum) * var;
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    const double denom = var + state.epsilon;
    if (!(denom > 0.0)) throw ParameterError("batchnorm: zero variance with epsilon = 0");
    const double inv_std = 1.0 / std::sqrt(denom);
    r.cache.inv_std[c] = inv_std;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t off = (n * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double h = (x[off + i] - mean) * inv_std;
        xh[off + i] = h;
        y[off + i] = h * state.gamma[c] + state.beta[c];
      }
    }
  }
  return r;
}

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Tensor4& grad_out) {
  if (cache.mode != Mode::train) {
    throw ContractError("batchnorm_backward needs a train-mode forward cache");
  }
  const Shape4& s = cache.x_hat.shape();
  check_same_shape(grad_out.shape(), s, "batchnorm_backward grad_out");
  const std::size_t plane = s.h * s.w;
  const double m = static_cast<double>(s.n * plane);

  BatchNormGrads g{Tensor4(s), std::vector<double>(s.c, 0.0), std::vector<double>(s.c, 0.0)};
  const auto dy = grad_out.data();
  const auto xh = cache.x_hat.data();
  auto dx = g.input.data();
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xh = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t off = (n * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy[off + i];
        sum_dy_xh += dy[off + i] * xh[off + i];
      }
    }
    g.beta[c] = sum_dy;
    g.gamma[c] = sum_dy_xh;
    const double k = cache.gamma[c] * cache.inv_std[c] / m;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t off = (n * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        dx[off + i] = k * (m * dy[off + i] - sum_dy - xh[off + i] * sum_dy_xh);
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Dropout

DropoutResult dropout_forward(Tensor4 input, double ratio, Mode mode, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ParameterError("dropout ratio must lie in [0, 1), got " + std::to_string(ratio));
  }
  const std::size_t count = input.numel();
  DropoutResult r{std::move(input), std::vector<std::uint8_t>(count, 1)};
  if (mode == Mode::infer || ratio == 0.0) return r;
  const double keep_scale = 1.0 / (1.0 - ratio);
  // Each 64-bit draw supplies two 32-bit uniforms.
  const auto threshold = static_cast<std::uint64_t>(std::ldexp(ratio, 32));
  auto out = r.output.data();
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % 2 == 0) bits = rng();
    const std::uint64_t u = (i % 2 == 0) ? (bits >> 32) : (bits & 0xffffffffULL);
    const bool keep = u >= threshold;
    r.mask[i] = keep;
    out[i] = keep ? out[i] * keep_scale : 0.0;
  }
  return r;
}

Tensor4 dropout_backward(const std::vector<std::uint8_t>& mask, double ratio,
                         const Tensor4& grad_out) {
  if (mask.size() != grad_out.numel()) {
    throw DimensionError("dropout_backward: mask length does not match grad_out");
  }
  Tensor4 g(grad_out);
  const double keep_scale = 1.0 / (1.0 - ratio);
  auto d = g.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = mask[i] ? d[i] * keep_scale : 0.0;
  return g;
}

// ---------------------------------------------------------------------------
// Layers

void Layer::collect(const std::string&, std::vector<ParamRef>&, std::vector<BufferRef>&) {}

Conv2d::Conv2d(std::size_t c_in, std::size_t c_out, ConvSpec spec, std::uint64_t seed)
    : spec_(spec),
      weight_(Shape4{c_out, c_in, spec.kh, spec.kw}),
      bias_(Shape4{c_out, 1, 1, 1}),
      weight_grad_(weight_.shape()),
      bias_grad_(bias_.shape()) {
  spec_.validate();
  Rng rng(seed);
  const double stddev = std::sqrt(2.0 / static_cast<double>(c_in * spec.kh * spec.kw));
  for (double& v : weight_.data()) v = stddev * standard_normal(rng);
}

Tensor4 Conv2d::forward(Tensor4 x, Mode) {
  input_ = std::move(x);
  return conv2d_forward(*input_, weight_, bias_.data(), spec_);
}

Tensor4 Conv2d::backward(const Tensor4& grad_out) {
  if (!input_) throw ContractError("conv backward called before forward");
  ConvGrads g = conv2d_backward(*input_, weight_, spec_, grad_out);
  weight_grad_ = std::move(g.weights);
  std::copy(g.bias.begin(), g.bias.end(), bias_grad_.data().begin());
  return std::move(g.input);
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamRef>& params,
                     std::vector<BufferRef>&) {
  params.push_back({prefix + "weight", &weight_, &weight_grad_});
  params.push_back({prefix + "bias", &bias_, &bias_grad_});
}

BatchNorm2d::BatchNorm2d(std::size_t channels)
    : state_(channels),
      gamma_(Shape4{channels, 1, 1, 1}, 1.0),
      beta_(Shape4{channels, 1, 1, 1}, 0.0),
      gamma_grad_(gamma_.shape()),
      beta_grad_(beta_.shape()),
      running_mean_(Shape4{channels, 1, 1, 1}, 0.0),
      running_var_(Shape4{channels, 1, 1, 1}, 1.0) {}

void BatchNorm2d::sync_from_tensors() {
  const auto g = gamma_.data();
  const auto b = beta_.data();
  const auto rm = running_mean_.data();
  const auto rv = running_var_.data();
  state_.gamma.assign(g.begin(), g.end());
  state_.beta.assign(b.begin(), b.end());
  state_.running_mean.assign(rm.begin(), rm.end());
  state_.running_var.assign(rv.begin(), rv.end());
}

void BatchNorm2d::sync_to_tensors() {
  std::copy(state_.gamma.begin(), state_.gamma.end(), gamma_.data().begin());
  std::copy(state_.beta.begin(), state_.beta.end(), beta_.data().begin());
  std::copy(state_.running_mean.begin(), state_.running_mean.end(), running_mean_.data().begin());
  std::copy(state_.running_var.begin(), state_.running_var.end(), running_var_.data().begin());
}

BatchNormState& BatchNorm2d::state() {
  sync_from_tensors();
  return state_;
}

Tensor4 BatchNorm2d::forward(Tensor4 x, Mode mode) {
  sync_from_tensors();
  BatchNormResult r = batchnorm_forward(std::move(x), state_, mode);
  sync_to_tensors();
  cache_ = std::move(r.cache);
  return std::move(r.output);
}

Tensor4 BatchNorm2d::backward(const Tensor4& grad_out) {
  if (!cache_) throw ContractError("batchnorm backward called before forward");
  BatchNormGrads g = batchnorm_backward(*cache_, grad_out);
  std::copy(g.gamma.begin(), g.gamma.end(), gamma_grad_.data().begin());
  std::copy(g.beta.begin(), g.beta.end(), beta_grad_.data().begin());
  return std::move(g.input);
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamRef>& params,
                          std::vector<BufferRef>& buffers) {
  params.push_back({prefix + "gamma", &gamma_, &gamma_grad_});
  params.push_back({prefix + "beta", &beta_, &beta_grad_});
  buffers.push_back({prefix + "running_mean", &running_mean_});
  buffers.push_back({prefix + "running_var", &running_var_});
}

Tensor4 ReLU::forward(Tensor4 x, Mode) {
  shape_ = x.shape();
  active_.resize(x.numel());
  double* v = x.data().data();
  std::uint8_t* mask = active_.data();
  const std::size_t count = x.numel();
  for (std::size_t i = 0; i < count; ++i) {
    const double value = v[i];
    mask[i] = value > 0.0;
    v[i] = value > 0.0 ? value : 0.0;
  }
  return x;
}

Tensor4 ReLU::backward(const Tensor4& grad_out) {
  if (!shape_) throw ContractError("relu backward called before forward");
  check_same_shape(grad_out.shape(), *shape_, "relu backward grad_out");
  Tensor4 g(grad_out);
  double* d = g.data().data();
  const std::uint8_t* mask = active_.data();
  const std::size_t count = g.numel();
  for (std::size_t i = 0; i < count; ++i) d[i] = mask[i] ? d[i] : 0.0;
  return g;
}

Tensor4 MaxPool2d::forward(Tensor4 x, Mode) {
  PoolResult r = maxpool2d_forward(x, spec_);
  indices_ = std::move(r.indices);
  return std::move(r.output);
}

Tensor4 MaxPool2d::backward(const Tensor4& grad_out) {
  if (!indices_) throw ContractError("maxpool backward called before forward");
  return maxpool2d_backward(*indices_, grad_out);
}

Dropout::Dropout(double ratio, std::uint64_t seed) : ratio_(ratio), rng_(seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ParameterError("dropout ratio must lie in [0, 1), got " + std::to_string(ratio));
  }
}

Tensor4 Dropout::forward(Tensor4 x, Mode mode) {
  DropoutResult r = dropout_forward(std::move(x), ratio_, mode, rng_);
  mask_ = std::move(r.mask);
  return std::move(r.output);
}

Tensor4 Dropout::backward(const Tensor4& grad_out) {
  if (!mask_) throw ContractError("dropout backward called before forward");
  return dropout_backward(*mask_, ratio_, grad_out);
}

Tensor4 Scale::forward(Tensor4 x, Mode) {
  forwarded_ = true;
  for (double& v : x.data()) v *= factor_;
  return x;
}

Tensor4 Scale::backward(const Tensor4& grad_out) {
  if (!forwarded_) throw ContractError("scale backward called before forward");
  return scale(grad_out, factor_);
}

Tensor4 HeightMean::forward(Tensor4 x, Mode) {
  const Shape4& s = x.shape();
  input_shape_ = s;
  Tensor4 out(Shape4{s.n, s.c, 1, s.w});
  const double inv = 1.0 / static_cast<double>(s.h);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t w = 0; w < s.w; ++w) {
        double acc = 0.0;
        for (std::size_t h = 0; h < s.h; ++h) acc += x(n, c, h, w);
        out(n, c, 0, w) = acc * inv;
      }
  return out;
}

Tensor4 HeightMean::backward(const Tensor4& grad_out) {
  if (!input_shape_) throw ContractError("height-mean backward called before forward");
  const Shape4& s = *input_shape_;
  check_same_shape(grad_out.shape(), Shape4{s.n, s.c, 1, s.w}, "height-mean grad_out");
  Tensor4 g(s);
  const double inv = 1.0 / static_cast<double>(s.h);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t h = 0; h < s.h; ++h)
        for (std::size_t w = 0; w < s.w; ++w) g(n, c, h, w) = grad_out(n, c, 0, w) * inv;
  return g;
}

Sequential& Sequential::add(std::string name, std::unique_ptr<Layer> layer) {
  layers_.emplace_back(std::move(name), std::move(layer));
  return *this;
}

Tensor4 Sequential::forward(Tensor4 x, Mode mode) {
  Tensor4 h = std::move(x);
  for (auto& [name, layer] : layers_) h = layer->forward(std::move(h), mode);
  forwarded_ = true;
  return h;
}

Tensor4 Sequential::backward(const Tensor4& grad_out) {
  if (!forwarded_) throw ContractError("network backward called before forward");
  Tensor4 g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->second->backward(g);
  return g;
}

void Sequential::collect(const std::string& prefix, std::vector<ParamRef>& params,
                         std::vector<BufferRef>& buffers) {
  for (auto& [name, layer] : layers_) layer->collect(prefix + name + ".", params, buffers);
}

std::vector<ParamRef> Sequential::parameters() {
  std::vector<ParamRef> params;
  std::vector<BufferRef> buffers;
  collect("", params, buffers);
  return params;
}

std::vector<BufferRef> Sequential::buffers() {
  std::vector<ParamRef> params;
  std::vector<BufferRef> buffers;
  collect("", params, buffers);
  return buffers;
}

std::unique_ptr<Sequential> layer_compose(std::vector<std::unique_ptr<Layer>> layers) {
  auto net = std::make_unique<Sequential>();
  for (std::size_t i = 0; i < layers.size(); ++i) net->add(std::to_string(i), std::move(layers[i]));
  return net;
}

std::size_t parameter_count(Sequential& net) {
  std::size_t total = 0;
  for (const ParamRef& p : net.parameters()) total += p.value->numel();
  return total;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[] = "LPRB1";
constexpr std::size_t kMagicLen = 5;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  std::string str(std::size_t len) {
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }

 private:
  void need(std::size_t len) const {
    if (bytes_.size() - pos_ < len) {
      throw IoError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  std::string out(kMagic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(checkpoint.header.size()));
  out += checkpoint.header;
  for (const NamedTensor& t : checkpoint.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    const Shape4& s = t.value.shape();
    for (std::size_t d : {s.n, s.c, s.h, s.w}) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.value.data()) put_f64(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagicLen || bytes.compare(0, kMagicLen, kMagic) != 0) {
    throw IoError("not an LPRB1 checkpoint (bad magic)");
  }
  Reader in(bytes);
  in.str(kMagicLen);
  Checkpoint cp;
  cp.header = in.str(in.u32());
  while (!in.done()) {
    NamedTensor t{in.str(in.u32()), Tensor4()};
    Shape4 s{in.u32(), in.u32(), in.u32(), in.u32()};
    std::vector<double> values(s.numel());
    for (double& v : values) v = in.f64();
    t.value = Tensor4(s, std::move(values));
    cp.tensors.push_back(std::move(t));
  }
  return cp;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  const std::string bytes = encode_checkpoint(checkpoint);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Checkpoint snapshot(Sequential& net, std::string header) {
  Checkpoint cp{std::move(header), {}};
  std::vector<ParamRef> params;
  std::vector<BufferRef> buffers;
  net.collect("", params, buffers);
  for (const ParamRef& p : params) cp.tensors.push_back({p.name, *p.value});
  for (const BufferRef& b : buffers) cp.tensors.push_back({b.name, *b.value});
  return cp;
}

void restore(Sequential& net, const Checkpoint& checkpoint) {
  std::map<std::string, const Tensor4*> by_name;
  for (const NamedTensor& t : checkpoint.tensors) by_name[t.name] = &t.value;
  std::vector<ParamRef> params;
  std::vector<BufferRef> buffers;
  net.collect("", params, buffers);
  auto assign = [&](const std::string& name, Tensor4* dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw IoError("checkpoint lacks tensor '" + name + "'");
    check_same_shape(it->second->shape(), dst->shape(), name.c_str());
    *dst = *it->second;
  };
  for (const ParamRef& p : params) assign(p.name, p.value);
  for (const BufferRef& b : buffers) assign(b.name, b.value);
}

}  // namespace lpr
