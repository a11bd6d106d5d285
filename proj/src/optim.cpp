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

#include "lpr/optim.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <numeric>
#include <sstream>

#include "lpr/ctc.hpp"
#include "lpr/error.hpp"

namespace lpr {

void TrainSchedule::validate() const {
  if (!(base_lr > 0.0)) throw ParameterError("base_lr must be positive");
  if (!(drop_factor > 1.0)) throw ParameterError("drop_factor must exceed 1");
  if (drop_every == 0) throw ParameterError("drop_every must be positive");
  if (total_iters == 0) throw ParameterError("total_iters must be positive");
  if (!(noise_scale >= 0.0)) throw ParameterError("noise_scale must be non-negative");
  if (batch_size == 0) throw ParameterError("batch_size must be positive");
}

double lr_at(const TrainSchedule& schedule, std::size_t iteration) {
  if (iteration >= schedule.total_iters) {
    throw ParameterError("iteration " + std::to_string(iteration) + " is outside the schedule of " +
                         std::to_string(schedule.total_iters));
  }
  const auto drops = static_cast<double>(iteration / schedule.drop_every);
  return schedule.base_lr / std::pow(schedule.drop_factor, drops);
}

AdamState AdamState::for_params(std::span<const ParamRef> params) {
  AdamState s;
  for (const ParamRef& p : params) {
    s.m.emplace_back(p.value->shape());
    s.v.emplace_back(p.value->shape());
  }
  return s;
}

void adam_step(std::span<const ParamRef> params, AdamState& state, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: moment count does not match parameter count");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRef& p = params[i];
    check_same_shape(p.grad->shape(), p.value->shape(), p.name.c_str());
    check_same_shape(state.m[i].shape(), p.value->shape(), p.name.c_str());
    auto theta = p.value->data();
    auto g = p.grad->data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void add_gradient_noise(Tensor4& grad, double noise_scale, Rng& rng) {
  if (!(noise_scale >= 0.0)) throw ParameterError("noise_scale must be non-negative");
  if (noise_scale == 0.0) return;
  for (double& g : grad.data()) g += noise_scale * standard_normal(rng);
}

void add_gradient_noise(std::span<const ParamRef> params, double noise_scale, Rng& rng) {
  for (const ParamRef& p : params) add_gradient_noise(*p.grad, noise_scale, rng);
}

std::vector<TrainSample> make_train_samples(const std::vector<Tensor4>& images,
                                            const std::vector<std::string>& labels,
                                            const CharSet& charset) {
  if (images.size() != labels.size()) throw DimensionError("one label per image required");
  std::vector<TrainSample> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Shape4& s = images[i].shape();
    if (s.n != 1 || s.c != kInputChannels || s.h != kInputHeight || s.w != kInputWidth) {
      throw DimensionError("training image " + std::to_string(i) + " must be (1, 3, 24, 94), got " +
                           s.str());
    }
    out.push_back({images[i], charset.encode(labels[i]), labels[i]});
  }
  return out;
}

Tensor4 stack_images(const std::vector<TrainSample>& dataset, std::span<const std::size_t> indices) {
  Tensor4 batch(Shape4{indices.size(), kInputChannels, kInputHeight, kInputWidth});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = dataset.at(indices[i]).image.sample(0);
    std::copy(src.begin(), src.end(), batch.sample(i).begin());
  }
  return batch;
}

namespace {

void shuffle_in_place(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
}

std::string checkpoint_path(const std::string& dir, std::size_t iteration) {
  return (std::filesystem::path(dir) / ("iter_" + std::to_string(iteration) + ".lprb")).string();
}

}  // namespace

std::vector<TrainRecord> train(LprNet& net, const std::vector<TrainSample>& dataset,
                               const TrainSchedule& schedule, const TrainOptions& options) {
  if (schedule.total_iters == 0) return {};
  schedule.validate();
  if (dataset.empty()) throw ParameterError("training dataset is empty");
  for (const TrainSample& s : dataset) {
    for (int k : s.target) {
      if (k < 0 || k >= net.charset().blank()) {
        throw ParameterError("label '" + s.label + "' is outside the network charset");
      }
    }
  }
  if (options.checkpoint_dir) std::filesystem::create_directories(*options.checkpoint_dir);

  std::ofstream log;
  if (options.log_path) {
    log.open(*options.log_path, std::ios::trunc);
    if (!log) throw IoError("cannot open training log: " + *options.log_path);
    log << "iteration,lr,loss,elapsed_ms\n";
  }

  Rng shuffle_rng(derive_seed(schedule.seed, 1));
  Rng noise_rng(derive_seed(schedule.seed, 2));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_in_place(order, shuffle_rng);
  std::size_t cursor = 0;

  const std::vector<ParamRef> params = net.parameters();
  AdamState adam = AdamState::for_params(params);
  std::vector<TrainRecord> records;
  records.reserve(schedule.total_iters);
  const auto start = std::chrono::steady_clock::now();

  std::vector<std::size_t> batch_idx;
  std::vector<std::vector<int>> targets;
  for (std::size_t it = 0; it < schedule.total_iters; ++it) {
    batch_idx.clear();
    targets.clear();
    for (std::size_t b = 0; b < schedule.batch_size; ++b) {
      if (cursor == order.size()) {
        shuffle_in_place(order, shuffle_rng);
        cursor = 0;
      }
      batch_idx.push_back(order[cursor++]);
      targets.push_back(dataset[batch_idx.back()].target);
    }

    const Tensor4 logits = net.forward(stack_images(dataset, batch_idx), Mode::train);
    CtcBatchResult ctc = ctc_batch(logits, targets, net.charset().blank());
    if (!std::isfinite(ctc.mean_loss)) {
      std::ostringstream msg;
      msg << "non-finite loss " << ctc.mean_loss << " at iteration " << (it + 1);
      if (options.checkpoint_dir) {
        const std::string snap =
            (std::filesystem::path(*options.checkpoint_dir) / ("diagnostic_iter_" + std::to_string(it + 1) + ".lprb"))
                .string();
        net.save(snap);
        msg << "; parameters saved to " << snap;
      }
      throw TrainingError(msg.str());
    }
    const double lr = lr_at(schedule, it);
    if (ctc.skipped.size() < schedule.batch_size) {
      net.backward(ctc.grad);
      add_gradient_noise(params, schedule.noise_scale, noise_rng);
      adam_step(params, adam, lr);
    }

    const double elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    records.push_back({it + 1, lr, ctc.mean_loss, elapsed});
    if (log) {
      log << (it + 1) << ',' << std::setprecision(17) << lr << ',' << ctc.mean_loss << ','
          << std::fixed << std::setprecision(1) << elapsed << std::defaultfloat << '\n';
    }
    if (options.progress && ((it + 1) % 100 == 0 || it == 0)) {
      *options.progress << "iter " << (it + 1) << " lr " << lr << " loss " << ctc.mean_loss << " ("
                        << static_cast<long>(elapsed / 1000.0) << " s)\n";
    }
    if (options.checkpoint_dir && options.checkpoint_every > 0 &&
        (it + 1) % options.checkpoint_every == 0 && it + 1 != schedule.total_iters) {
      net.save(checkpoint_path(*options.checkpoint_dir, it + 1));
    }
  }
  if (options.checkpoint_dir) net.save(checkpoint_path(*options.checkpoint_dir, schedule.total_iters));
  return records;
}

}  // namespace lpr
