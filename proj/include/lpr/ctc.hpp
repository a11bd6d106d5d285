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
#include <span>
#include <vector>

#include "lpr/lprnet.hpp"
#include "lpr/tensor.hpp"

namespace lpr {

/// Row-major (steps x classes) matrix of per-step log probabilities.
struct LogProbs {
  std::size_t steps = 0;
  std::size_t classes = 0;
  std::vector<double> values;

  double at(std::size_t t, std::size_t k) const { return values[t * classes + k]; }
};

struct CtcInstance {
  LogProbs log_probs;
  std::vector<int> target;  // blank excluded
  int blank = 0;
};

struct CtcLoss {
  double value;   // negative log-likelihood, +inf when infeasible
  bool feasible;
};

// Max-subtracted log-softmax over the classes at every step.
LogProbs log_softmax(const LogitSequence& logits);
// Same, for a plain (steps x classes) row-major score matrix.
LogProbs log_softmax_rows(std::span<const double> scores, std::size_t steps, std::size_t classes);

// Shortest input that can emit the target: one step per label plus one
// separating blank per pair of equal neighbours.
std::size_t ctc_min_steps(std::span<const int> target);

double log_add(double a, double b);

CtcLoss ctc_loss(const CtcInstance& instance);

// d loss / d logits as a (steps x classes) row-major matrix, i.e.
// softmax minus the per-step alignment posterior. Throws ParameterError
// on infeasible instances.
std::vector<double> ctc_grad(const CtcInstance& instance);

// Exhaustive sum over all classes^steps paths. Refuses (ParameterError)
// when that count exceeds 1e7.
double ctc_brute_force(const CtcInstance& instance);

// Merge repeats, then drop blanks.
std::vector<int> ctc_collapse(std::span<const int> path, int blank);

/// Mean CTC loss over the feasible items of a batch and its gradient with
/// respect to (n, classes, 1, T) logits. Infeasible items are skipped and
/// contribute zero gradient.
struct CtcBatchResult {
  double mean_loss = 0.0;
  Tensor4 grad;
  std::vector<std::size_t> skipped;
};

CtcBatchResult ctc_batch(const Tensor4& logits, const std::vector<std::vector<int>>& targets,
                         int blank);

}  // namespace lpr
