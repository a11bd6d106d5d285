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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lpr/rng.hpp"
#include "lpr/tensor.hpp"

namespace lpr {

enum class Mode { train, infer };

/// A trainable tensor and its gradient buffer, addressed by a dotted name.
struct ParamRef {
  std::string name;
  Tensor4* value;
  Tensor4* grad;
};

/// Non-trainable state that still belongs in a checkpoint.
struct BufferRef {
  std::string name;
  Tensor4* value;
};

// ---------------------------------------------------------------------------
// Batch normalization

struct BatchNormState {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double epsilon = 1e-5;
  // running <- momentum * running + (1 - momentum) * batch statistic
  double momentum = 0.9;

  explicit BatchNormState(std::size_t channels = 1);
};

struct BatchNormCache {
  Mode mode = Mode::infer;
  Tensor4 x_hat;
  std::vector<double> inv_std;
  std::vector<double> gamma;
};

struct BatchNormResult {
  Tensor4 output;
  BatchNormCache cache;
};

struct BatchNormGrads {
  Tensor4 input;
  std::vector<double> gamma;
  std::vector<double> beta;
};

// Train mode normalizes with biased batch statistics over (n, h, w) and
// updates the running averages; infer mode reads the running averages only.
BatchNormResult batchnorm_forward(Tensor4 input, BatchNormState& state, Mode mode);
BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Tensor4& grad_out);

// ---------------------------------------------------------------------------
// Dropout

struct DropoutResult {
  Tensor4 output;
  std::vector<std::uint8_t> mask;  // 1 = kept
};

// Inverted dropout: survivors are scaled by 1 / (1 - ratio) in train mode,
// infer mode is the identity.
DropoutResult dropout_forward(Tensor4 input, double ratio, Mode mode, Rng& rng);
Tensor4 dropout_backward(const std::vector<std::uint8_t>& mask, double ratio,
                         const Tensor4& grad_out);

// ---------------------------------------------------------------------------
// Stateful layers

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Tensor4 forward(Tensor4 x, Mode mode) = 0;
  // Overwrites (never accumulates) this layer's parameter gradients.
  virtual Tensor4 backward(const Tensor4& grad_out) = 0;
  virtual void collect(const std::string& prefix, std::vector<ParamRef>& params,
                       std::vector<BufferRef>& buffers);
};

class Conv2d : public Layer {
 public:
  // Kaiming-normal weights, std = sqrt(2 / (c_in * kh * kw)); zero bias.
  Conv2d(std::size_t c_in, std::size_t c_out, ConvSpec spec, std::uint64_t seed);

  std::string kind() const override { return "conv"; }
  Tensor4 forward(Tensor4 x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers) override;

  const ConvSpec& spec() const { return spec_; }
  Tensor4& weight() { return weight_; }
  Tensor4& bias() { return bias_; }

 private:
  ConvSpec spec_;
  Tensor4 weight_, bias_;
  Tensor4 weight_grad_, bias_grad_;
  std::optional<Tensor4> input_;
};

class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(std::size_t channels);

  std::string kind() const override { return "batchnorm"; }
  Tensor4 forward(Tensor4 x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers) override;

  // Copies between the parameter tensors and the state vectors.
  BatchNormState& state();

 private:
  void sync_from_tensors();
  void sync_to_tensors();

  BatchNormState state_;
  Tensor4 gamma_, beta_, gamma_grad_, beta_grad_;
  Tensor4 running_mean_, running_var_;
  std::optional<BatchNormCache> cache_;
};

class ReLU : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor4 forward(Tensor4 x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  std::optional<Shape4> shape_;
  std::vector<std::uint8_t> active_;
};

class MaxPool2d : public Layer {
 public:
  explicit MaxPool2d(ConvSpec spec) : spec_(spec) {}
  std::string kind() const override { return "maxpool"; }
  Tensor4 forward(Tensor4 x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  ConvSpec spec_;
  std::optional<PoolIndices> indices_;
};

class Dropout : public Layer {
 public:
  Dropout(double ratio, std::uint64_t seed);
  std::string kind() const override { return "dropout"; }
  Tensor4 forward(Tensor4 x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  double ratio() const { return ratio_; }

 private:
  double ratio_;
  Rng rng_;
  std::optional<std::vector<std::uint8_t>> mask_;
};

// Multiplies by a constant. Useful for composing linear test chains.
class Scale : public Layer {
 public:
  explicit Scale(double factor) : factor_(factor) {}
  std::string kind() const override { return "scale"; }
  Tensor4 forward(Tensor4 x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  double factor_;
  bool forwarded_ = false;
};

// Averages over the height axis: (n, c, h, w) -> (n, c, 1, w).
class HeightMean : public Layer {
 public:
  std::string kind() const override { return "height_mean"; }
  Tensor4 forward(Tensor4 x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  std::optional<Shape4> input_shape_;
};

/// Ordered chain of layers. An empty chain is the identity.
class Sequential : public Layer {
 public:
  Sequential() = default;
  Sequential& add(std::string name, std::unique_ptr<Layer> layer);

  std::string kind() const override { return "sequential"; }
  Tensor4 forward(Tensor4 x, Mode mode) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void collect(const std::string& prefix, std::vector<ParamRef>& params,
               std::vector<BufferRef>& buffers) override;

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i).second; }
  const std::string& name(std::size_t i) const { return layers_.at(i).first; }

  std::vector<ParamRef> parameters();
  std::vector<BufferRef> buffers();

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Layer>>> layers_;
  bool forwarded_ = false;
};

// Names layers by position ("0", "1", ...).
std::unique_ptr<Sequential> layer_compose(std::vector<std::unique_ptr<Layer>> layers);

std::size_t parameter_count(Sequential& net);

// ---------------------------------------------------------------------------
// Checkpoint container

struct NamedTensor {
  std::string name;
  Tensor4 value;
};

struct Checkpoint {
  std::string header;
  std::vector<NamedTensor> tensors;
};

// "LPRB1", u32 header length, header bytes, then per tensor:
// u32 name length, name bytes, 4 x u32 dims, little-endian f64 data.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

// Parameters and buffers of a network in collection order.
Checkpoint snapshot(Sequential& net, std::string header);
// Copies tensors into the network by name; every network tensor must be present.
void restore(Sequential& net, const Checkpoint& checkpoint);

}  // namespace lpr
