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

#include "lpr/lprnet.hpp"

#include "lpr/error.hpp"
#include "lpr/rng.hpp"

namespace lpr {

namespace {

ConvSpec conv_spec(std::size_t kh, std::size_t kw, std::size_t ph, std::size_t pw) {
  return ConvSpec{kh, kw, 1, 1, ph, pw};
}

void add_conv_bn_relu(Sequential& seq, const std::string& name, std::size_t c_in,
                      std::size_t c_out, ConvSpec spec, std::uint64_t seed) {
  seq.add(name, std::make_unique<Conv2d>(c_in, c_out, spec, seed));
  seq.add(name + "_bn", std::make_unique<BatchNorm2d>(c_out));
  seq.add(name + "_relu", std::make_unique<ReLU>());
}

std::size_t scaled(std::size_t channels, std::size_t divisor) {
  if (divisor == 0 || channels % divisor != 0) {
    throw ParameterError("width divisor " + std::to_string(divisor) + " does not divide " +
                         std::to_string(channels));
  }
  return channels / divisor;
}

std::string header_for(const CharSet& charset) { return "charset=" + charset.str(); }

}  // namespace

std::unique_ptr<Sequential> small_basic_block(std::size_t c_in, std::size_t c_out,
                                              std::uint64_t seed) {
  if (c_out % 4 != 0 || c_out == 0) {
    throw ParameterError("small basic block output channels must be a positive multiple of 4, got " +
                         std::to_string(c_out));
  }
  const std::size_t mid = c_out / 4;
  auto block = std::make_unique<Sequential>();
  add_conv_bn_relu(*block, "conv1", c_in, mid, conv_spec(1, 1, 0, 0), derive_seed(seed, 0));
  add_conv_bn_relu(*block, "conv2", mid, mid, conv_spec(3, 1, 1, 0), derive_seed(seed, 1));
  add_conv_bn_relu(*block, "conv3", mid, mid, conv_spec(1, 3, 0, 1), derive_seed(seed, 2));
  add_conv_bn_relu(*block, "conv4", mid, c_out, conv_spec(1, 1, 0, 0), derive_seed(seed, 3));
  return block;
}

LprNet::LprNet(LprNetConfig config) : config_(std::move(config)) {
  if (config_.charset.size() < 2) throw ParameterError("charset needs at least 2 characters");
  const std::size_t d = config_.width_divisor;
  const std::size_t c64 = scaled(64, d);
  const std::size_t c128 = scaled(128, d);
  const std::size_t c256 = scaled(256, d);
  if (c128 % 4 != 0 || c256 % 4 != 0) {
    throw ParameterError("width divisor leaves block widths not divisible by 4");
  }
  const std::uint64_t s = config_.seed;
  const ConvSpec pool_s1{3, 3, 1, 1, 1, 1};
  const ConvSpec pool_s21{3, 3, 2, 1, 1, 1};

  body_ = std::make_unique<Sequential>();
  Sequential& b = *body_;
  add_conv_bn_relu(b, "stem", kInputChannels, c64, conv_spec(3, 3, 1, 1), derive_seed(s, 0));
  b.add("pool1", std::make_unique<MaxPool2d>(pool_s1));
  b.add("block1", small_basic_block(c64, c128, derive_seed(s, 1)));
  b.add("pool2", std::make_unique<MaxPool2d>(pool_s21));
  b.add("block2", small_basic_block(c128, c256, derive_seed(s, 2)));
  b.add("block3", small_basic_block(c256, c256, derive_seed(s, 3)));
  b.add("pool3", std::make_unique<MaxPool2d>(pool_s21));
  b.add("dropout", std::make_unique<Dropout>(config_.dropout_ratio, derive_seed(s, 4)));
  // The classifier kernel is one row tall, so averaging rows before it
  // equals averaging its output rows and costs a sixth of the arithmetic.
  b.add("height_mean", std::make_unique<HeightMean>());
  b.add("classifier", std::make_unique<Conv2d>(c256, config_.charset.classes(),
                                               conv_spec(1, 13, 0, 6), derive_seed(s, 5)));
}

Tensor4 LprNet::forward(const Tensor4& batch, Mode mode) {
  const Shape4& s = batch.shape();
  if (s.c != kInputChannels || s.h != kInputHeight || s.w != kInputWidth) {
    throw DimensionError("LPRNet input must be (n, 3, 24, 94), got " + s.str());
  }
  return body_->forward(batch, mode);
}

Tensor4 LprNet::backward(const Tensor4& grad_logits) { return body_->backward(grad_logits); }

Checkpoint LprNet::to_checkpoint() { return snapshot(*body_, header_for(config_.charset)); }

void LprNet::save(const std::string& path) { save_checkpoint(path, to_checkpoint()); }

LprNet LprNet::from_checkpoint(const Checkpoint& checkpoint) {
  const std::string prefix = "charset=";
  if (checkpoint.header.rfind(prefix, 0) != 0) {
    throw IoError("checkpoint header does not carry a charset");
  }
  LprNetConfig cfg;
  cfg.charset = CharSet::from_utf8(checkpoint.header.substr(prefix.size()));
  std::size_t stem_channels = 0;
  for (const NamedTensor& t : checkpoint.tensors) {
    if (t.name == "stem.weight") stem_channels = t.value.shape().n;
  }
  if (stem_channels == 0 || 64 % stem_channels != 0) {
    throw IoError("checkpoint has no usable stem.weight tensor");
  }
  cfg.width_divisor = 64 / stem_channels;
  LprNet net(cfg);
  restore(*net.body_, checkpoint);
  return net;
}

LprNet LprNet::load(const std::string& path) { return from_checkpoint(load_checkpoint(path)); }

std::vector<std::string> LprNet::recognize(const Tensor4& batch) {
  std::vector<std::string> out;
  for (const LogitSequence& seq : logits_to_sequence(forward(batch, Mode::infer))) {
    out.push_back(greedy_decode(seq, config_.charset));
  }
  return out;
}

LprNet build_lprnet(const LprNetConfig& config) { return LprNet(config); }

std::vector<LogitSequence> logits_to_sequence(const Tensor4& backbone_output) {
  const Shape4& s = backbone_output.shape();
  std::vector<LogitSequence> out;
  out.reserve(s.n);
  const double inv = 1.0 / static_cast<double>(s.h);
  for (std::size_t n = 0; n < s.n; ++n) {
    LogitSequence seq{s.c, s.w, std::vector<double>(s.c * s.w, 0.0)};
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t w = 0; w < s.w; ++w) {
        double acc = 0.0;
        for (std::size_t h = 0; h < s.h; ++h) acc += backbone_output(n, c, h, w);
        seq.values[c * s.w + w] = s.h == 1 ? acc : acc * inv;
      }
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<int> greedy_path_decode(const LogitSequence& logits, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (std::size_t t = 0; t < logits.steps; ++t) {
    int best = 0;
    for (std::size_t k = 1; k < logits.classes; ++k) {
      if (logits.at(k, t) > logits.at(static_cast<std::size_t>(best), t)) best = static_cast<int>(k);
    }
    if (best != prev && best != blank) out.push_back(best);
    prev = best;
  }
  return out;
}

std::string greedy_decode(const LogitSequence& logits, const CharSet& charset) {
  return charset.decode(greedy_path_decode(logits, charset.blank()));
}

}  // namespace lpr
