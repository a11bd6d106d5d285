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

#include "lpr/ctc.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "lpr/error.hpp"

namespace lpr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Blank-interleaved target: b t0 b t1 ... b
std::vector<int> extend(const std::vector<int>& target, int blank) {
  std::vector<int> ext(2 * target.size() + 1, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

void check_instance(const CtcInstance& inst) {
  const LogProbs& lp = inst.log_probs;
  if (lp.steps == 0 || lp.classes == 0 || lp.values.size() != lp.steps * lp.classes) {
    throw DimensionError("ctc: log-prob matrix does not match its declared shape");
  }
  if (inst.blank < 0 || static_cast<std::size_t>(inst.blank) >= lp.classes) {
    throw ParameterError("ctc: blank index outside the class range");
  }
  for (int k : inst.target) {
    if (k < 0 || static_cast<std::size_t>(k) >= lp.classes || k == inst.blank) {
      throw ParameterError("ctc: target label " + std::to_string(k) + " is not a character class");
    }
  }
}

bool can_skip(const std::vector<int>& ext, std::size_t s, int blank) {
  return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
}

// alpha[t][s]: log-probability of emitting ext[0..s] over steps 0..t, ending in s.
std::vector<double> forward_vars(const CtcInstance& inst, const std::vector<int>& ext) {
  const std::size_t steps = inst.log_probs.steps;
  const std::size_t states = ext.size();
  std::vector<double> alpha(steps * states, kNegInf);
  alpha[0] = inst.log_probs.at(0, static_cast<std::size_t>(ext[0]));
  if (states > 1) alpha[1] = inst.log_probs.at(0, static_cast<std::size_t>(ext[1]));
  for (std::size_t t = 1; t < steps; ++t) {
    const double* prev = &alpha[(t - 1) * states];
    double* cur = &alpha[t * states];
    for (std::size_t s = 0; s < states; ++s) {
      double acc = prev[s];
      if (s >= 1) acc = log_add(acc, prev[s - 1]);
      if (can_skip(ext, s, inst.blank)) acc = log_add(acc, prev[s - 2]);
      cur[s] = acc == kNegInf ? kNegInf
                              : acc + inst.log_probs.at(t, static_cast<std::size_t>(ext[s]));
    }
  }
  return alpha;
}

// beta[t][s]: log-probability of emitting the rest of ext over steps t+1..T-1
// given state s at step t (emission at t excluded).
std::vector<double> backward_vars(const CtcInstance& inst, const std::vector<int>& ext) {
  const std::size_t steps = inst.log_probs.steps;
  const std::size_t states = ext.size();
  std::vector<double> beta(steps * states, kNegInf);
  beta[(steps - 1) * states + states - 1] = 0.0;
  if (states > 1) beta[(steps - 1) * states + states - 2] = 0.0;
  for (std::size_t t = steps - 1; t-- > 0;) {
    const double* next = &beta[(t + 1) * states];
    double* cur = &beta[t * states];
    for (std::size_t s = 0; s < states; ++s) {
      double acc = next[s] + inst.log_probs.at(t + 1, static_cast<std::size_t>(ext[s]));
      if (s + 1 < states) {
        acc = log_add(acc, next[s + 1] + inst.log_probs.at(t + 1, static_cast<std::size_t>(ext[s + 1])));
      }
      if (s + 2 < states && can_skip(ext, s + 2, inst.blank)) {
        acc = log_add(acc, next[s + 2] + inst.log_probs.at(t + 1, static_cast<std::size_t>(ext[s + 2])));
      }
      cur[s] = acc;
    }
  }
  return beta;
}

double total_log_likelihood(const std::vector<double>& alpha, std::size_t steps,
                            std::size_t states) {
  const double* last = &alpha[(steps - 1) * states];
  return states > 1 ? log_add(last[states - 1], last[states - 2]) : last[0];
}

}  // namespace

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

LogProbs log_softmax_rows(std::span<const double> scores, std::size_t steps, std::size_t classes) {
  if (scores.size() != steps * classes) throw DimensionError("log_softmax: score count mismatch");
  LogProbs out{steps, classes, std::vector<double>(steps * classes)};
  for (std::size_t t = 0; t < steps; ++t) {
    const double* row = scores.data() + t * classes;
    double mx = row[0];
    for (std::size_t k = 1; k < classes; ++k) mx = std::max(mx, row[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) sum += std::exp(row[k] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t k = 0; k < classes; ++k) out.values[t * classes + k] = row[k] - lse;
  }
  return out;
}

LogProbs log_softmax(const LogitSequence& logits) {
  std::vector<double> rows(logits.steps * logits.classes);
  for (std::size_t t = 0; t < logits.steps; ++t)
    for (std::size_t k = 0; k < logits.classes; ++k) rows[t * logits.classes + k] = logits.at(k, t);
  return log_softmax_rows(rows, logits.steps, logits.classes);
}

std::size_t ctc_min_steps(std::span<const int> target) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < target.size(); ++i) repeats += target[i] == target[i - 1];
  return target.size() + repeats;
}

CtcLoss ctc_loss(const CtcInstance& instance) {
  check_instance(instance);
  if (instance.log_probs.steps < ctc_min_steps(instance.target)) {
    return {std::numeric_limits<double>::infinity(), false};
  }
  const std::vector<int> ext = extend(instance.target, instance.blank);
  const std::vector<double> alpha = forward_vars(instance, ext);
  const double ll = total_log_likelihood(alpha, instance.log_probs.steps, ext.size());
  return {-ll, ll != kNegInf};
}

std::vector<double> ctc_grad(const CtcInstance& instance) {
  check_instance(instance);
  const LogProbs& lp = instance.log_probs;
  if (lp.steps < ctc_min_steps(instance.target)) {
    throw ParameterError("ctc_grad: target is infeasible for the input length");
  }
  const std::vector<int> ext = extend(instance.target, instance.blank);
  const std::size_t states = ext.size();
  const std::vector<double> alpha = forward_vars(instance, ext);
  const std::vector<double> beta = backward_vars(instance, ext);
  const double ll = total_log_likelihood(alpha, lp.steps, states);
  if (ll == kNegInf) throw ParameterError("ctc_grad: target has zero probability");

  std::vector<double> grad(lp.steps * lp.classes);
  std::vector<double> occupancy(lp.classes);
  for (std::size_t t = 0; t < lp.steps; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (std::size_t s = 0; s < states; ++s) {
      const auto k = static_cast<std::size_t>(ext[s]);
      occupancy[k] = log_add(occupancy[k], alpha[t * states + s] + beta[t * states + s]);
    }
    for (std::size_t k = 0; k < lp.classes; ++k) {
      const double posterior = occupancy[k] == kNegInf ? 0.0 : std::exp(occupancy[k] - ll);
      grad[t * lp.classes + k] = std::exp(lp.at(t, k)) - posterior;
    }
  }
  return grad;
}

std::vector<int> ctc_collapse(std::span<const int> path, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (int k : path) {
    if (k != prev && k != blank) out.push_back(k);
    prev = k;
  }
  return out;
}

double ctc_brute_force(const CtcInstance& instance) {
  check_instance(instance);
  const LogProbs& lp = instance.log_probs;
  double paths = 1.0;
  for (std::size_t t = 0; t < lp.steps; ++t) paths *= static_cast<double>(lp.classes);
  if (paths > 1e7) throw ParameterError("ctc_brute_force: more than 1e7 paths, refusing");

  std::vector<int> path(lp.steps, 0);
  double total = 0.0;
  while (true) {
    if (ctc_collapse(path, instance.blank) == instance.target) {
      double p = 1.0;
      for (std::size_t t = 0; t < lp.steps; ++t) p *= std::exp(lp.at(t, static_cast<std::size_t>(path[t])));
      total += p;
    }
    std::size_t t = 0;
    while (t < lp.steps && ++path[t] == static_cast<int>(lp.classes)) path[t++] = 0;
    if (t == lp.steps) break;
  }
  return total > 0.0 ? -std::log(total) : std::numeric_limits<double>::infinity();
}

CtcBatchResult ctc_batch(const Tensor4& logits, const std::vector<std::vector<int>>& targets,
                         int blank) {
  const Shape4& s = logits.shape();
  if (s.h != 1) throw DimensionError("ctc_batch: logits must be height-collapsed (h = 1)");
  if (targets.size() != s.n) throw DimensionError("ctc_batch: one target per batch item required");
  CtcBatchResult r{0.0, Tensor4(s), {}};
  const std::vector<LogitSequence> seqs = logits_to_sequence(logits);
  std::vector<std::vector<double>> grads(s.n);
  std::size_t used = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    CtcInstance inst{log_softmax(seqs[n]), targets[n], blank};
    const CtcLoss loss = ctc_loss(inst);
    if (!loss.feasible) {
      std::cerr << "warning: skipping infeasible CTC target for batch item " << n << "\n";
      r.skipped.push_back(n);
      continue;
    }
    r.mean_loss += loss.value;
    grads[n] = ctc_grad(inst);
    ++used;
  }
  if (used == 0) return r;
  r.mean_loss /= static_cast<double>(used);
  const double inv = 1.0 / static_cast<double>(used);
  for (std::size_t n = 0; n < s.n; ++n) {
    if (grads[n].empty()) continue;
    for (std::size_t t = 0; t < s.w; ++t)
      for (std::size_t k = 0; k < s.c; ++k) r.grad(n, k, 0, t) = grads[n][t * s.c + k] * inv;
  }
  return r;
}

}  // namespace lpr
