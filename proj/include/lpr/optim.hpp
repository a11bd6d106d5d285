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
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpr/layers.hpp"
#include "lpr/lprnet.hpp"
#include "lpr/rng.hpp"

namespace lpr {

/// Step-decay learning-rate schedule plus the batch/noise settings of a run.
struct TrainSchedule {
  double base_lr = 1e-3;
  double drop_factor = 10.0;
  std::size_t drop_every = 100000;
  std::size_t total_iters = 250000;
  double noise_scale = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

// base_lr / drop_factor^floor(iteration / drop_every)
double lr_at(const TrainSchedule& schedule, std::size_t iteration);

struct AdamState {
  std::vector<Tensor4> m;
  std::vector<Tensor4> v;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(std::span<const ParamRef> params);
};

// Bias-corrected Adam update of every parameter from its gradient buffer.
void adam_step(std::span<const ParamRef> params, AdamState& state, double lr);

// Adds i.i.d. N(0, noise_scale^2) to every gradient entry.
void add_gradient_noise(Tensor4& grad, double noise_scale, Rng& rng);
void add_gradient_noise(std::span<const ParamRef> params, double noise_scale, Rng& rng);

/// One preprocessed (1, 3, 24, 94) plate with its encoded label.
struct TrainSample {
  Tensor4 image;
  std::vector<int> target;
  std::string label;
};

struct TrainRecord {
  std::size_t iteration;
  double lr;
  double loss;
  double elapsed_ms;
};

struct TrainOptions {
  std::optional<std::string> checkpoint_dir;
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint
  std::optional<std::string> log_path;
  std::ostream* progress = nullptr;  // a line every 100 iterations
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Builds TrainSamples from labelled images, rejecting labels outside the
// network's charset.
std::vector<TrainSample> make_train_samples(const std::vector<Tensor4>& images,
                                            const std::vector<std::string>& labels,
                                            const CharSet& charset);

// Seeded shuffle -> forward -> CTC -> backward -> gradient noise -> Adam.
// Deterministic for a given schedule.seed. Throws TrainingError on a
// non-finite loss after writing a diagnostic checkpoint (when a checkpoint
// directory is configured).
std::vector<TrainRecord> train(LprNet& net, const std::vector<TrainSample>& dataset,
                               const TrainSchedule& schedule, const TrainOptions& options = {});

// Batches of batch_size (n, 3, 24, 94) built from consecutive dataset entries.
Tensor4 stack_images(const std::vector<TrainSample>& dataset, std::span<const std::size_t> indices);

}  // namespace lpr
