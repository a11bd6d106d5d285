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

// One PASS/FAIL line per acceptance criterion. Names given on the command
// line restrict the run; --keep leaves the working directory in place.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lpr/cli.hpp"
#include "lpr/ctc.hpp"
#include "lpr/layers.hpp"
#include "lpr/lprnet.hpp"
#include "lpr/metrics.hpp"
#include "lpr/pareto.hpp"
#include "lpr/platesynth.hpp"
#include "support/oracles.hpp"

using namespace lpr;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

fs::path g_work;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

int lprbench(const std::vector<std::string>& args, std::ostream& err) {
  std::ostringstream out;
  return cli::run(args, out, err);
}

int lprbench(const std::vector<std::string>& args) {
  std::ostringstream err;
  const int code = lprbench(args, err);
  if (code != 0) std::cerr << "lprbench exited " << code << ": " << err.str();
  return code;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(oracle::slurp(p)); }

// ---------------------------------------------------------------------------

Verdict ctc_oracle() {
  const auto t0 = Clock::now();
  std::vector<std::vector<int>> targets = {{}};
  for (std::size_t len = 1; len <= 3; ++len) {
    const std::size_t total = static_cast<std::size_t>(std::pow(3, len));
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<int> t;
      for (std::size_t c = code, i = 0; i < len; ++i, c /= 3) t.push_back(static_cast<int>(c % 3));
      targets.push_back(t);
    }
  }
  std::size_t cases = 0, feasible = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 2.0);
    for (std::size_t T = 1; T <= 6; ++T) {
      std::vector<double> scores(T * 4);
      for (double& v : scores) v = d(rng);
      const LogProbs lp = log_softmax_rows(scores, T, 4);
      for (const auto& target : targets) {
        const CtcInstance in{lp, target, 3};
        const CtcLoss fast = ctc_loss(in);
        const double brute = ctc_brute_force(in);
        ++cases;
        if (std::isinf(brute) || !fast.feasible) {
          if (std::isinf(brute) != !fast.feasible) return {false, "feasibility differs at seed " + std::to_string(seed)};
          continue;
        }
        ++feasible;
        worst = std::max(worst, std::abs(fast.value - brute));
      }
    }
  }
  const bool ok = worst <= 1e-9;
  return {ok, std::to_string(cases) + " cases (" + std::to_string(feasible) + " feasible), max |diff| " +
                  fmt(worst, 3) + " <= 1e-9, " + fmt(seconds_since(t0), 3) + " s"};
}

// ---------------------------------------------------------------------------

struct GradTally {
  std::size_t instances = 0, coords = 0, bad = 0;
  double worst = 0.0;
  void check(double err, double tol) {
    ++coords;
    worst = std::max(worst, err);
    if (err > tol) ++bad;
  }
  std::string str(const char* name) const {
    return std::string(name) + " " + std::to_string(instances) + " inst/" + std::to_string(coords) +
           " coords max " + fmt(worst, 2);
  }
};

Tensor4 random_tensor(Shape4 s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Tensor4 t(s);
  for (double& v : t.data()) v = d(rng);
  return t;
}

double project(const Tensor4& out, const Tensor4& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) s += out.data()[i] * r.data()[i];
  return s;
}

GradTally conv_gradients() {
  GradTally g;
  std::mt19937_64 rng(101);
  for (int inst = 0; inst < 20; ++inst, ++g.instances) {
    ConvSpec s;
    s.kh = 1 + rng() % 3;
    s.kw = 1 + rng() % 3;
    s.sh = 1 + rng() % 2;
    s.sw = 1 + rng() % 2;
    s.ph = rng() % s.kh;
    s.pw = rng() % s.kw;
    Tensor4 x = random_tensor(Shape4{2, 2, 5, 7}, rng);
    Tensor4 w = random_tensor(Shape4{3, 2, s.kh, s.kw}, rng);
    std::vector<double> b = {0.1, -0.2, 0.3};
    const Tensor4 r = random_tensor(Shape4{2, 3, s.out_h(5), s.out_w(7)}, rng);
    auto f = [&] { return project(conv2d_forward(x, w, b, s), r); };
    const ConvGrads cg = conv2d_backward(x, w, s, r);
    for (std::size_t i = 0; i < x.numel(); ++i)
      g.check(oracle::rel_err(cg.input.data()[i], oracle::central_difference(f, x.data()[i], 1e-5)), 1e-4);
    for (std::size_t i = 0; i < w.numel(); ++i)
      g.check(oracle::rel_err(cg.weights.data()[i], oracle::central_difference(f, w.data()[i], 1e-5)), 1e-4);
    for (std::size_t i = 0; i < b.size(); ++i)
      g.check(oracle::rel_err(cg.bias[i], oracle::central_difference(f, b[i], 1e-5)), 1e-4);
  }
  return g;
}

GradTally batchnorm_gradients() {
  GradTally g;
  std::mt19937_64 rng(102);
  for (int inst = 0; inst < 20; ++inst, ++g.instances) {
    Tensor4 x = random_tensor(Shape4{3, 2, 3, 4}, rng, 2.0);
    BatchNormState st(2);
    st.gamma = {1.3, -0.7};
    st.beta = {0.2, 0.5};
    const Tensor4 r = random_tensor(x.shape(), rng);
    auto f = [&] {
      BatchNormState tmp = st;
      return project(batchnorm_forward(x, tmp, Mode::train).output, r);
    };
    BatchNormState tmp = st;
    const BatchNormGrads bg = batchnorm_backward(batchnorm_forward(x, tmp, Mode::train).cache, r);
    for (std::size_t i = 0; i < x.numel(); ++i)
      g.check(oracle::rel_err(bg.input.data()[i], oracle::central_difference(f, x.data()[i], 1e-5)), 1e-4);
    for (std::size_t c = 0; c < 2; ++c) {
      g.check(oracle::rel_err(bg.gamma[c], oracle::central_difference(f, st.gamma[c], 1e-5)), 1e-4);
      g.check(oracle::rel_err(bg.beta[c], oracle::central_difference(f, st.beta[c], 1e-5)), 1e-4);
    }
  }
  return g;
}

GradTally maxpool_gradients() {
  GradTally g;
  std::mt19937_64 rng(103);
  for (int inst = 0; inst < 20; ++inst, ++g.instances) {
    ConvSpec s;
    s.kh = 1 + rng() % 3;
    s.kw = 2 + rng() % 2;
    s.sh = 1 + rng() % 2;
    s.sw = 1 + rng() % 2;
    s.ph = rng() % s.kh;
    s.pw = rng() % s.kw;
    // Distinct values 0.01 apart: no ties, and no step crosses a kink.
    Tensor4 x(Shape4{2, 2, 6, 8});
    std::vector<double> v(x.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i);
    std::shuffle(v.begin(), v.end(), rng);
    std::copy(v.begin(), v.end(), x.data().begin());
    const PoolResult p = maxpool2d_forward(x, s);
    const Tensor4 r = random_tensor(p.output.shape(), rng);
    auto f = [&] { return project(maxpool2d_forward(x, s).output, r); };
    const Tensor4 gx = maxpool2d_backward(p.indices, r);
    for (std::size_t i = 0; i < x.numel(); ++i)
      g.check(oracle::rel_err(gx.data()[i], oracle::central_difference(f, x.data()[i], 1e-5)), 1e-4);
  }
  return g;
}

GradTally ctc_gradients() {
  GradTally g;
  std::mt19937_64 rng(104);
  for (int inst = 0; inst < 20; ++inst, ++g.instances) {
    const std::size_t T = 4 + rng() % 6, K = 3 + rng() % 5;
    std::vector<double> scores = random_tensor(Shape4{1, 1, T, K}, rng, 1.5).values();
    const int blank = static_cast<int>(K - 1);
    std::vector<int> target;
    for (std::size_t i = 0, L = 1 + rng() % 3; i < L; ++i) target.push_back(static_cast<int>(rng() % (K - 1)));
    auto f = [&] { return ctc_loss({log_softmax_rows(scores, T, K), target, blank}).value; };
    if (std::isinf(f())) {
      --inst;
      continue;
    }
    const std::vector<double> grad = ctc_grad({log_softmax_rows(scores, T, K), target, blank});
    for (std::size_t i = 0; i < scores.size(); ++i)
      g.check(oracle::rel_err(grad[i], oracle::central_difference(f, scores[i], 1e-5)), 1e-4);
  }
  return g;
}

GradTally composed_gradients() {
  GradTally g;
  const CharSet cs = CharSet::from_utf8("ABC");
  for (std::uint64_t inst = 0; inst < 20; ++inst, ++g.instances) {
    std::mt19937_64 rng(200 + inst);
    LprNet net(LprNetConfig{cs, 0.0, 16, inst});
    Tensor4 x(Shape4{2, 3, 24, 94});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : x.data()) v = u(rng);
    std::vector<std::vector<int>> targets(2);
    for (auto& t : targets)
      for (std::size_t i = 0, L = 1 + rng() % 4; i < L; ++i) t.push_back(static_cast<int>(rng() % 3));
    auto f = [&] { return ctc_batch(net.forward(x, Mode::train), targets, cs.blank()).mean_loss; };
    const Tensor4 gx = net.backward(ctc_batch(net.forward(x, Mode::train), targets, cs.blank()).grad);
    const auto params = net.parameters();
    std::vector<Tensor4> grads;
    for (const ParamRef& p : params) grads.push_back(*p.grad);
    std::uniform_int_distribution<std::size_t> px(0, x.numel() - 1);
    for (int k = 0; k < 4; ++k) {
      const std::size_t i = px(rng);
      g.check(oracle::best_rel_err(f, x.data()[i], gx.data()[i], 1e-3), 1e-3);
    }
    // One coordinate from every parameter tensor, a second from a random one.
    for (std::size_t p = 0; p <= params.size(); ++p) {
      const std::size_t which = p < params.size() ? p : rng() % params.size();
      std::uniform_int_distribution<std::size_t> pi(0, params[which].value->numel() - 1);
      const std::size_t i = pi(rng);
      g.check(oracle::best_rel_err(f, params[which].value->data()[i], grads[which].data()[i], 1e-3), 1e-3);
    }
  }
  return g;
}

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<const char*, GradTally>> parts = {{"conv", conv_gradients()},
                                                                {"batchnorm", batchnorm_gradients()},
                                                                {"maxpool", maxpool_gradients()},
                                                                {"ctc", ctc_gradients()},
                                                                {"lprnet", composed_gradients()}};
  bool ok = true;
  std::string detail;
  for (const auto& [name, t] : parts) {
    ok = ok && t.bad == 0 && t.instances >= 20;
    if (!detail.empty()) detail += "; ";
    detail += t.str(name);
    if (t.bad) detail += " (" + std::to_string(t.bad) + " over tolerance)";
  }
  return {ok, detail + "; " + fmt(seconds_since(t0), 3) + " s"};
}

// ---------------------------------------------------------------------------

Verdict levenshtein_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(300);
  auto word = [&] {
    std::string s;
    for (std::size_t i = 0, n = rng() % 9; i < n; ++i) s += "ABCD"[rng() % 4];
    return s;
  };
  std::size_t mismatches = 0, axiom_failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string a = word(), b = word();
    if (levenshtein(a, b) != oracle::levenshtein_recursive(utf8_to_u32(a), utf8_to_u32(b))) ++mismatches;
  }
  for (int i = 0; i < 1000; ++i) {
    const std::string a = word(), b = word(), c = word();
    const std::size_t ab = levenshtein(a, b);
    if (ab != levenshtein(b, a)) ++axiom_failures;
    if ((ab == 0) != (a == b)) ++axiom_failures;
    if (levenshtein(a, c) > ab + levenshtein(b, c)) ++axiom_failures;
  }
  return {mismatches == 0 && axiom_failures == 0,
          "1000 pairs, " + std::to_string(mismatches) + " oracle mismatches; 1000 triples, " +
              std::to_string(axiom_failures) + " axiom failures; " + fmt(seconds_since(t0), 3) + " s"};
}

Verdict accuracy_report() {
  std::vector<PredictionRecord> recs;
  for (int i = 0; i < 900; ++i) recs.push_back({"34ABC12", "34ABC12", ""});
  for (int i = 0; i < 60; ++i) recs.push_back({"34ABC12", i % 2 ? "34ABC1" : "34ABC123", ""});
  for (int i = 0; i < 40; ++i) recs.push_back({"34ABC12", "34A8C12", ""});
  const EvalReport r = evaluate(recs);
  const LengthSplit s = length_split_table(recs);
  const bool ok = r.accuracy == 0.900 && r.n == 1000 && s == LengthSplit{40, 60, 100};
  return {ok, "accuracy " + fmt(r.accuracy, 17) + ", split (" + std::to_string(s.same_length_errors) + ", " +
                  std::to_string(s.different_length_errors) + ", " + std::to_string(s.total_errors) + ")"};
}

// ---------------------------------------------------------------------------

std::string check_pareto_table(const ParetoTable& t) {
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (t.rows[i].count > t.rows[i - 1].count) return "counts not descending";
    if (t.rows[i].cumulative_percent < t.rows[i - 1].cumulative_percent) return "cumulative decreases";
  }
  if (t.rows.empty() || std::abs(t.rows.back().cumulative_percent - 100.0) > 1e-9) return "cumulative does not end at 100";
  return "";
}

// Returns a failure description, or "" when every invariant holds.
std::string check_records(const std::vector<PredictionRecord>& recs, std::size_t& tallied) {
  const CharErrorTally t = tally_same_length_errors(recs);
  std::size_t fp = 0, fn = 0;
  for (const auto& [c, n] : t.fp_counts) fp += n;
  for (const auto& [c, n] : t.fn_counts) fn += n;
  if (fp != fn) return "fp total " + std::to_string(fp) + " != fn total " + std::to_string(fn);
  tallied += fp;
  if (fp == 0) return "";
  for (const auto* counts : {&t.fp_counts, &t.fn_counts}) {
    const std::string e = check_pareto_table(build_pareto(*counts));
    if (!e.empty()) return e;
  }
  return "";
}

Verdict pareto_invariants() {
  const auto t0 = Clock::now();
  const fs::path dir = g_work / "pareto";
  // Evaluation outputs: a briefly trained model on real renders, and random record sets.
  if (lprbench({"gen", "--count", "60", "--seed", "21", "--out", (dir / "data").string()}) != 0 ||
      lprbench({"train", "--manifest", (dir / "data").string(), "--iterations", "25", "--batch-size", "8",
                "--width-divisor", "16", "--out", (dir / "model").string()}) != 0 ||
      lprbench({"eval", "--manifest", (dir / "data").string(), "--checkpoint", (dir / "model/model.lprb").string(),
                "--out", (dir / "eval").string()}) != 0)
    return {false, "could not produce an evaluation output"};
  std::vector<std::vector<PredictionRecord>> sets = {load_records((dir / "eval/records.csv").string())};
  std::mt19937_64 rng(400);
  for (int k = 0; k < 20; ++k) {
    std::vector<PredictionRecord> recs;
    for (int i = 0; i < 200; ++i) {
      std::string a, b;
      const std::size_t la = 1 + rng() % 7, lb = rng() % 3 ? la : 1 + rng() % 7;
      for (std::size_t j = 0; j < la; ++j) a += "0O8BDQ1I"[rng() % 8];
      for (std::size_t j = 0; j < lb; ++j) b += rng() % 4 ? (j < la ? a[j] : 'X') : "0O8BDQ1I"[rng() % 8];
      recs.push_back({a, b, ""});
    }
    sets.push_back(recs);
  }
  std::size_t tallied = 0;
  for (const auto& recs : sets) {
    const std::string e = check_records(recs, tallied);
    if (!e.empty()) return {false, e};
  }

  // Injected confusions on top of the real evaluation output: O read as 0
  // three times as often as the reverse.
  std::vector<PredictionRecord> injected = sets[0];
  for (int i = 0; i < 60; ++i) injected.push_back({"34OBC12", "340BC12", "inj"});
  for (int i = 0; i < 20; ++i) injected.push_back({"34ABC10", "34ABC1O", "inj"});
  save_records(injected, (dir / "injected.csv").string());
  if (lprbench({"pareto", "--records", (dir / "injected.csv").string(), "--out", (dir / "injected").string()}) != 0)
    return {false, "pareto command failed"};
  const ParetoTable fp = read_pareto_csv((dir / "injected/fp_pareto.csv").string());
  const ParetoTable fn = read_pareto_csv((dir / "injected/fn_pareto.csv").string());
  for (const ParetoTable* t : {&fp, &fn}) {
    const std::string e = check_pareto_table(*t);
    if (!e.empty()) return {false, "chart CSV: " + e};
  }
  if (fp.rows[0].character != U'0' || fn.rows[0].character != U'O')
    return {false, "top FP '" + u32_to_utf8(std::u32string(1, fp.rows[0].character)) + "', top FN '" +
                       u32_to_utf8(std::u32string(1, fn.rows[0].character)) + "'"};
  if (!fs::exists(dir / "injected/fp_pareto.svg") || !fs::exists(dir / "injected/fn_pareto.svg"))
    return {false, "charts missing"};
  return {true, std::to_string(sets.size()) + " record sets, " + std::to_string(tallied) +
                    " tallied mismatches; injected: FP rank 1 '0' (" + fmt(fp.rows[0].percent, 3) +
                    "%), FN rank 1 'O' (" + fmt(fn.rows[0].percent, 3) + "%); " + fmt(seconds_since(t0), 3) + " s"};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    if (e.path().filename() == "run.json") continue;  // records its own output path
    std::string body = oracle::slurp(e.path());
    if (e.path().filename() == "train_log.csv") {
      // Wall-clock column excluded.
      std::istringstream in(body);
      std::string line, kept;
      while (std::getline(in, line)) kept += line.substr(0, line.rfind(',')) + "\n";
      body = kept;
    }
    files[rel] = body;
  }
  return files;
}

Verdict determinism() {
  const auto t0 = Clock::now();
  std::vector<std::map<std::string, std::string>> runs;
  for (int run = 0; run < 2; ++run) {
    const fs::path d = g_work / "determinism" / std::to_string(run);
    if (lprbench({"--seed", "5", "gen", "--count", "48", "--out", (d / "data").string()}) != 0 ||
        lprbench({"--seed", "5", "train", "--manifest", (d / "data").string(), "--iterations", "40", "--batch-size",
                  "8", "--width-divisor", "8", "--checkpoint-every", "20", "--out", (d / "model").string()}) != 0 ||
        lprbench({"--seed", "5", "eval", "--manifest", (d / "data").string(), "--checkpoint",
                  (d / "model/model.lprb").string(), "--out", (d / "eval").string()}) != 0)
      return {false, "pipeline failed on run " + std::to_string(run)};
    runs.push_back(artifacts(d));
  }
  for (const char* must : {"data/manifest.csv", "model/model.lprb", "eval/report.json", "eval/records.csv"})
    if (!runs[0].contains(must)) return {false, std::string("missing ") + must};
  if (runs[0].size() != runs[1].size()) return {false, "file sets differ"};
  for (const auto& [name, body] : runs[0]) {
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != body) return {false, name + " differs between runs"};
  }
  return {true, std::to_string(runs[0].size()) + " files byte-identical across two runs; " +
                    fmt(seconds_since(t0), 3) + " s"};
}

Verdict external_engine() {
  const auto t0 = Clock::now();
  const fs::path d = g_work / "extbench";
  const std::string engines = LPR_TEST_ENGINES;
  if (lprbench({"gen", "--count", "30", "--seed", "31", "--out", (d / "data").string()}) != 0)
    return {false, "gen failed"};
  if (lprbench({"extbench", "--manifest", (d / "data").string(), "--engine", engines + "/read_label.sh {input}",
                "--label", "perfect", "--out", d.string()}) != 0 ||
      lprbench({"extbench", "--manifest", (d / "data").string(), "--engine", engines + "/drop_last.sh {input}",
                "--label", "drop_last", "--out", d.string()}) != 0)
    return {false, "extbench failed"};
  const auto perfect = read_json(d / "perfect/report.json");
  const auto drop = read_json(d / "drop_last/report.json");
  const bool ok = perfect["accuracy"] == 1.0 && drop["accuracy"] == 0.0 && drop["tn1"] == drop["n"] &&
                  drop["tn2"] == 0 && drop["n"] == 30;
  return {ok, "read-label accuracy " + perfect["accuracy"].dump() + "; drop-last accuracy " + drop["accuracy"].dump() +
                  " with tn1 " + drop["tn1"].dump() + "/" + drop["n"].dump() + "; " + fmt(seconds_since(t0), 3) +
                  " s"};
}

// ---------------------------------------------------------------------------

Verdict end_to_end() {
  const auto t0 = Clock::now();
  const fs::path d = g_work / "end_to_end";
  const std::string train = (d / "train").string(), test = (d / "test").string();
  if (lprbench({"gen", "--count", "2000", "--seed", "11", "--out", train}) != 0 ||
      lprbench({"gen", "--count", "200", "--seed", "12", "--out", test}) != 0)
    return {false, "dataset generation failed"};
  // Labels shared with the training set are reported, not excluded.
  std::set<std::string> seen;
  for (const ManifestEntry& e : read_manifest(train).entries) seen.insert(e.label);
  std::size_t overlap = 0;
  for (const ManifestEntry& e : read_manifest(test).entries) overlap += seen.count(e.label);
  std::cerr << "end_to_end: training (progress every 100 iterations)\n";
  if (lprbench({"--seed", "1", "train", "--manifest", train, "--iterations", "3000", "--batch-size", "32",
                "--out", (d / "model").string()},
               std::cerr) != 0)
    return {false, "training failed"};
  if (lprbench({"eval", "--manifest", test, "--checkpoint", (d / "model/model.lprb").string(), "--out",
                (d / "eval").string()}) != 0)
    return {false, "evaluation failed"};
  const double elapsed = seconds_since(t0);
  const auto report = read_json(d / "eval/report.json");
  const double acc = report["accuracy"];
  const bool ok = acc >= 0.80 && elapsed <= 1800.0;
  return {ok, "accuracy " + fmt(acc) + " (>= 0.80) on " + report["n"].dump() + " held-out plates (" +
                  std::to_string(overlap) + " labels also in training), mean Levenshtein " +
                  fmt(report["mean_levenshtein"].get<double>()) + ", " + fmt(elapsed, 4) + " s (<= 1800 s)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"ctc_oracle_equivalence", ctc_oracle},   {"gradient_suite", gradient_suite},
      {"levenshtein_oracle", levenshtein_oracle}, {"accuracy_report_level", accuracy_report},
      {"pareto_invariants", pareto_invariants}, {"determinism", determinism},
      {"external_engine_protocol", external_engine}, {"end_to_end_training", end_to_end},
  };
  std::set<std::string> only;
  bool keep = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--keep") {
      keep = true;
    } else {
      only.insert(a);
    }
  }
  g_work = oracle::scratch_dir("acceptance");
  std::cout << "workdir " << g_work.string() << std::endl;
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.contains(name)) continue;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  if (!keep) fs::remove_all(g_work);
  return failures == 0 ? 0 : 1;
}
