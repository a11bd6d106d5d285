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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lpr/ctc.hpp"
#include "lpr/error.hpp"
#include "lpr/optim.hpp"
#include "support/oracles.hpp"

using namespace lpr;
namespace fs = std::filesystem;

TEST(Schedule, TableScaleDefaults) {
  const TrainSchedule s;
  EXPECT_DOUBLE_EQ(lr_at(s, 0), 0.001);
  EXPECT_DOUBLE_EQ(lr_at(s, 99999), 0.001);
  EXPECT_DOUBLE_EQ(lr_at(s, 100000), 0.0001);
  EXPECT_DOUBLE_EQ(lr_at(s, 249999), 0.00001);
  EXPECT_THROW(lr_at(s, 250000), ParameterError);
}

TEST(Schedule, PlateausAndMonotone) {
  TrainSchedule s;
  s.total_iters = 1050;
  s.drop_every = 100;
  double prev = lr_at(s, 0);
  std::size_t plateaus = 1;
  for (std::size_t i = 1; i < s.total_iters; ++i) {
    const double lr = lr_at(s, i);
    EXPECT_LE(lr, prev);
    if (lr != prev) ++plateaus;
    prev = lr;
  }
  EXPECT_EQ(plateaus, 11u);
  TrainSchedule bad;
  bad.drop_factor = 1.0;
  EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(Adam, ZeroGradLeavesParameters) {
  Tensor4 w(Shape4{1, 1, 2, 2}, {1, -2, 3, 0.5}), g(Shape4{1, 1, 2, 2}, 0.0);
  const Tensor4 before = w;
  std::vector<ParamRef> p = {{"w", &w, &g}};
  AdamState st = AdamState::for_params(p);
  adam_step(p, st, 0.1);
  EXPECT_EQ(w, before);
}

TEST(Adam, FirstStepClosedForm) {
  Tensor4 w(Shape4{1, 1, 1, 3}, {0, 0, 0}), g(Shape4{1, 1, 1, 3}, {0.3, -2e-3, 5.0});
  std::vector<ParamRef> p = {{"w", &w, &g}};
  AdamState st = AdamState::for_params(p);
  adam_step(p, st, 0.01);
  for (std::size_t i = 0; i < 3; ++i) {
    const double gi = g.data()[i];
    EXPECT_NEAR(w.data()[i], -0.01 * gi / (std::abs(gi) + 1e-8), 1e-15);
  }
  Tensor4 other(Shape4{1, 1, 1, 2});
  std::vector<ParamRef> wrong = {{"w", &other, &other}};
  EXPECT_THROW(adam_step(wrong, st, 0.01), DimensionError);
}

TEST(Adam, ConvergesOnQuadraticWithBoundedSteps) {
  Tensor4 w(Shape4{1, 1, 1, 1}, 1.0), g(Shape4{1, 1, 1, 1});
  std::vector<ParamRef> p = {{"w", &w, &g}};
  AdamState st = AdamState::for_params(p);
  for (int i = 0; i < 200; ++i) {
    g.data()[0] = 2.0 * w.data()[0];
    const double before = w.data()[0];
    adam_step(p, st, 0.1);
    EXPECT_LE(std::abs(w.data()[0] - before), 1.1 * 0.1);
    EXPECT_GE(st.v[0].data()[0], 0.0);
  }
  EXPECT_LT(std::abs(w.data()[0]), 1e-2);
}

TEST(GradientNoise, ZeroScaleStatisticsAndDeterminism) {
  Tensor4 g(Shape4{1, 1, 1000, 1000}, 0.0);
  Rng r0(1);
  add_gradient_noise(g, 0.0, r0);
  for (double v : g.data()) ASSERT_EQ(v, 0.0);
  Rng r1(2026);
  add_gradient_noise(g, 1e-3, r1);
  double s = 0.0, ss = 0.0;
  for (double v : g.data()) {
    s += v;
    ss += v * v;
  }
  const double n = static_cast<double>(g.numel());
  const double sd = std::sqrt(ss / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, 1e-3, 0.02 * 1e-3);
  Tensor4 h(Shape4{1, 1, 1000, 1000}, 0.0);
  Rng r2(2026);
  add_gradient_noise(h, 1e-3, r2);
  EXPECT_EQ(g, h);
}

namespace {

std::vector<TrainSample> tiny_dataset(std::size_t n, const CharSet& cs) {
  std::vector<Tensor4> images;
  std::vector<std::string> labels;
  Rng rng(99);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor4 x(Shape4{1, 3, 24, 94});
    for (double& v : x.data()) v = uniform01(rng);
    images.push_back(x);
    labels.push_back(i % 2 ? "AB" : "BA");
  }
  return make_train_samples(images, labels, cs);
}

}  // namespace

TEST(Train, ZeroIterationsIsANoOp) {
  const CharSet cs = CharSet::from_utf8("AB");
  LprNet net(LprNetConfig{cs, 0.5, 16, 1});
  const std::string before = encode_checkpoint(net.to_checkpoint());
  TrainSchedule s;
  s.total_iters = 0;
  EXPECT_TRUE(train(net, tiny_dataset(2, cs), s).empty());
  EXPECT_EQ(encode_checkpoint(net.to_checkpoint()), before);
}

TEST(Train, RejectsLabelsOutsideCharset) {
  const CharSet cs = CharSet::from_utf8("A");
  EXPECT_THROW(make_train_samples({Tensor4(Shape4{1, 3, 24, 94})}, {"AB"}, cs), ParameterError);
}

TEST(Train, MemorizesOneSample) {
  const CharSet cs = CharSet::from_utf8("0123456789");
  std::vector<Tensor4> img(1, Tensor4(Shape4{1, 3, 24, 94}));
  Rng rng(5);
  for (double& v : img[0].data()) v = uniform01(rng);
  const auto data = make_train_samples(img, {"4071"}, cs);
  LprNet net(LprNetConfig{cs, 0.0, 8, 2});
  TrainSchedule s;
  s.total_iters = 300;
  s.batch_size = 1;
  s.drop_every = 1000;
  s.seed = 3;
  const auto log = train(net, data, s);
  ASSERT_EQ(log.size(), 300u);
  EXPECT_LE(log.back().loss, 0.1 * log.front().loss) << log.front().loss << " -> " << log.back().loss;
  EXPECT_EQ(net.recognize(img[0]), std::vector<std::string>{"4071"});
}

TEST(Train, SameSeedBitIdenticalCheckpointsAndLog) {
  const CharSet cs = CharSet::from_utf8("AB");
  const auto data = tiny_dataset(5, cs);
  TrainSchedule s;
  s.total_iters = 6;
  s.batch_size = 2;
  s.seed = 77;
  const fs::path dir = oracle::scratch_dir("train-det");
  std::vector<std::string> ckpts;
  std::vector<std::vector<double>> losses;
  for (int run = 0; run < 2; ++run) {
    LprNet net(LprNetConfig{cs, 0.5, 16, 4});
    TrainOptions o;
    o.checkpoint_dir = (dir / std::to_string(run)).string();
    o.checkpoint_every = 4;
    o.log_path = (dir / std::to_string(run) / "log.csv").string();
    fs::create_directories(*o.checkpoint_dir);
    const auto log = train(net, data, s, o);
    losses.emplace_back();
    for (const TrainRecord& r : log) losses.back().push_back(r.loss);
    ckpts.push_back(oracle::slurp(dir / std::to_string(run) / "iter_6.lprb"));
    EXPECT_TRUE(fs::exists(dir / std::to_string(run) / "iter_4.lprb"));
    std::ifstream in(*o.log_path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "iteration,lr,loss,elapsed_ms");
  }
  EXPECT_FALSE(ckpts[0].empty());
  EXPECT_EQ(ckpts[0], ckpts[1]);
  EXPECT_EQ(losses[0], losses[1]);
  fs::remove_all(dir);
}

TEST(Train, NonFiniteLossAbortsWithDiagnostic) {
  const CharSet cs = CharSet::from_utf8("AB");
  LprNet net(LprNetConfig{cs, 0.0, 16, 1});
  net.parameters().back().value->data()[0] = std::nan("");
  TrainSchedule s;
  s.total_iters = 3;
  s.batch_size = 2;
  const fs::path dir = oracle::scratch_dir("train-nan");
  TrainOptions o;
  o.checkpoint_dir = dir.string();
  EXPECT_THROW(train(net, tiny_dataset(2, cs), s, o), TrainingError);
  EXPECT_TRUE(fs::exists(dir / "diagnostic_iter_1.lprb"));
  fs::remove_all(dir);
}
