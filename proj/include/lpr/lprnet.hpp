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
#include <string>
#include <vector>

#include "lpr/charset.hpp"
#include "lpr/layers.hpp"

namespace lpr {

inline constexpr std::size_t kInputChannels = 3;
inline constexpr std::size_t kInputHeight = 24;
inline constexpr std::size_t kInputWidth = 94;

struct LprNetConfig {
  CharSet charset = CharSet::latin_default();
  double dropout_ratio = 0.5;
  // Divides every backbone channel count (64/128/256). 1 is the full-size
  // network; larger values give the same topology at lower cost.
  std::size_t width_divisor = 1;
  std::uint64_t seed = 0;
};

/// Per-timestep raw class scores for one plate, stored class-major:
/// values[k * steps + t].
struct LogitSequence {
  std::size_t classes = 0;
  std::size_t steps = 0;
  std::vector<double> values;

  double at(std::size_t k, std::size_t t) const { return values[k * steps + t]; }
};

// Conv 1x1 -> Conv 3x1 (pad h) -> Conv 1x3 (pad w) -> Conv 1x1, each followed
// by BN + ReLU. Spatial extent is preserved. c_out must be divisible by 4.
std::unique_ptr<Sequential> small_basic_block(std::size_t c_in, std::size_t c_out,
                                              std::uint64_t seed);

class LprNet {
 public:
  explicit LprNet(LprNetConfig config);

  // (n, 3, 24, 94) -> (n, classes, 1, T) height-averaged logits.
  Tensor4 forward(const Tensor4& batch, Mode mode);
  Tensor4 backward(const Tensor4& grad_logits);

  std::vector<ParamRef> parameters() { return body_->parameters(); }
  std::size_t parameter_count() { return lpr::parameter_count(*body_); }
  Sequential& body() { return *body_; }
  const LprNetConfig& config() const { return config_; }
  const CharSet& charset() const { return config_.charset; }

  // Header carries the charset; width is recovered from tensor shapes.
  Checkpoint to_checkpoint();
  void save(const std::string& path);
  static LprNet from_checkpoint(const Checkpoint& checkpoint);
  static LprNet load(const std::string& path);

  // Greedy-decoded strings for an (n, 3, 24, 94) batch in infer mode.
  std::vector<std::string> recognize(const Tensor4& batch);

 private:
  LprNetConfig config_;
  std::unique_ptr<Sequential> body_;
};

LprNet build_lprnet(const LprNetConfig& config);

// Mean over the height axis, one sequence per batch item.
std::vector<LogitSequence> logits_to_sequence(const Tensor4& backbone_output);

// Argmax per step (ties -> lowest index), collapse repeats, drop blanks.
std::vector<int> greedy_path_decode(const LogitSequence& logits, int blank);
std::string greedy_decode(const LogitSequence& logits, const CharSet& charset);

}  // namespace lpr
