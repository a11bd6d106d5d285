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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lpr/cli.hpp"
#include "lpr/ctc.hpp"
#include "lpr/imaging.hpp"
#include "lpr/lprnet.hpp"
#include "lpr/metrics.hpp"
#include "lpr/optim.hpp"
#include "lpr/pareto.hpp"
#include "lpr/platesynth.hpp"

namespace py = pybind11;
using namespace lpr;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (3, H, W) array <-> Image
Image to_image(const Array& a) {
  if (a.ndim() != 3 || a.shape(0) != 3) throw DimensionError("expected a (3, H, W) array");
  const auto h = static_cast<std::size_t>(a.shape(1)), w = static_cast<std::size_t>(a.shape(2));
  return Image(Tensor4(Shape4{1, 3, h, w}, std::vector<double>(a.data(), a.data() + a.size())));
}

Array from_image(const Image& img) {
  Array out({std::size_t{3}, img.height(), img.width()});
  std::copy(img.pixels.data().begin(), img.pixels.data().end(), out.mutable_data());
  return out;
}

Tensor4 to_batch(const Array& a) {
  if (a.ndim() != 4) throw DimensionError("expected an (n, 3, 24, 94) array");
  const Shape4 s{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                 static_cast<std::size_t>(a.shape(2)), static_cast<std::size_t>(a.shape(3))};
  return Tensor4(s, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_tensor(const Tensor4& t) {
  const Shape4& s = t.shape();
  Array out({s.n, s.c, s.h, s.w});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

LogProbs to_log_probs(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a (steps, classes) array");
  LogProbs lp;
  lp.steps = static_cast<std::size_t>(a.shape(0));
  lp.classes = static_cast<std::size_t>(a.shape(1));
  lp.values.assign(a.data(), a.data() + a.size());
  return lp;
}

std::vector<PredictionRecord> to_records(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back({pairs[i].first, pairs[i].second, std::to_string(i)});
  return out;
}

py::list pareto_rows(const ParetoTable& t) {
  py::list rows;
  for (const ParetoRow& r : t.rows) {
    rows.append(py::make_tuple(u32_to_utf8(std::u32string(1, r.character)), r.count, r.percent, r.cumulative_percent));
  }
  return rows;
}

std::map<char32_t, std::size_t> to_counts(const std::map<std::string, std::size_t>& m) {
  std::map<char32_t, std::size_t> out;
  for (const auto& [k, v] : m) {
    const std::u32string s = utf8_to_u32(k);
    if (s.size() != 1) throw ParameterError("pareto keys must be single characters");
    out[s[0]] = v;
  }
  return out;
}

std::map<std::string, std::size_t> from_counts(const std::map<char32_t, std::size_t>& m) {
  std::map<std::string, std::size_t> out;
  for (const auto& [k, v] : m) out[u32_to_utf8(std::u32string(1, k))] = v;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "License-plate recognition benchmarking core";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);

  // metrics
  m.def("levenshtein", &levenshtein, py::arg("a"), py::arg("b"));
  m.def(
      "classify_prediction",
      [](const std::string& truth, const std::string& pred) {
        return std::string(outcome_name(classify_prediction({truth, pred, ""})));
      },
      py::arg("ground_truth"), py::arg("predicted"));
  m.def(
      "evaluate",
      [](const std::vector<std::pair<std::string, std::string>>& pairs) {
        const EvalReport r = evaluate(to_records(pairs));
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["mean_levenshtein"] = r.mean_levenshtein;
        d["tp"] = r.tp;
        d["tn1"] = r.tn1;
        d["tn2"] = r.tn2;
        d["n"] = r.n;
        return d;
      },
      py::arg("pairs"), "Evaluate (ground_truth, predicted) pairs.");
  m.def(
      "length_split",
      [](const std::vector<std::pair<std::string, std::string>>& pairs) {
        const LengthSplit s = length_split_table(to_records(pairs));
        return py::make_tuple(s.same_length_errors, s.different_length_errors, s.total_errors);
      },
      py::arg("pairs"));

  // pareto
  m.def(
      "tally_same_length_errors",
      [](const std::vector<std::pair<std::string, std::string>>& pairs) {
        const CharErrorTally t = tally_same_length_errors(to_records(pairs));
        return py::make_tuple(from_counts(t.fp_counts), from_counts(t.fn_counts));
      },
      py::arg("pairs"), "Returns (fp_counts, fn_counts).");
  m.def(
      "build_pareto", [](const std::map<std::string, std::size_t>& counts) { return pareto_rows(build_pareto(to_counts(counts))); },
      py::arg("counts"), "Rows of (character, count, percent, cumulative_percent).");
  m.def(
      "emit_pareto_chart",
      [](const std::map<std::string, std::size_t>& counts, const std::string& title, const std::string& path) {
        emit_pareto_chart(build_pareto(to_counts(counts)), title, path);
      },
      py::arg("counts"), py::arg("title"), py::arg("path"));

  // ctc
  m.def(
      "log_softmax",
      [](const Array& scores) {
        const LogProbs lp = to_log_probs(scores);
        const LogProbs out = log_softmax_rows(lp.values, lp.steps, lp.classes);
        Array a({out.steps, out.classes});
        std::copy(out.values.begin(), out.values.end(), a.mutable_data());
        return a;
      },
      py::arg("scores"), "Row-wise log-softmax of a (steps, classes) array.");
  m.def(
      "ctc_loss",
      [](const Array& log_probs, const std::vector<int>& target, int blank) {
        return ctc_loss({to_log_probs(log_probs), target, blank}).value;
      },
      py::arg("log_probs"), py::arg("target"), py::arg("blank"));
  m.def(
      "ctc_brute_force",
      [](const Array& log_probs, const std::vector<int>& target, int blank) {
        return ctc_brute_force({to_log_probs(log_probs), target, blank});
      },
      py::arg("log_probs"), py::arg("target"), py::arg("blank"));
  m.def(
      "ctc_grad",
      [](const Array& log_probs, const std::vector<int>& target, int blank) {
        const LogProbs lp = to_log_probs(log_probs);
        const std::vector<double> g = ctc_grad({lp, target, blank});
        Array a({lp.steps, lp.classes});
        std::copy(g.begin(), g.end(), a.mutable_data());
        return a;
      },
      py::arg("log_probs"), py::arg("target"), py::arg("blank"));

  // optim
  m.def(
      "lr_at",
      [](double base_lr, double drop_factor, std::size_t drop_every, std::size_t total_iters, std::size_t iteration) {
        TrainSchedule s;
        s.base_lr = base_lr;
        s.drop_factor = drop_factor;
        s.drop_every = drop_every;
        s.total_iters = total_iters;
        return lr_at(s, iteration);
      },
      py::arg("base_lr"), py::arg("drop_factor"), py::arg("drop_every"), py::arg("total_iters"), py::arg("iteration"));

  // imaging
  m.def("load_image", [](const std::string& path) { return from_image(load_image(path)); }, py::arg("path"));
  m.def("save_png", [](const Array& a, const std::string& path) { save_png(to_image(a), path); }, py::arg("image"),
        py::arg("path"));
  m.def(
      "resize_area", [](const Array& a, std::size_t w, std::size_t h) { return from_image(resize_area(to_image(a), w, h)); },
      py::arg("image"), py::arg("width") = 94, py::arg("height") = 24);
  m.def("rgb_to_bgr", [](const Array& a) { return from_image(rgb_to_bgr(to_image(a))); }, py::arg("image"));
  m.def(
      "crop",
      [](const Array& a, double l, double t, double r, double b) { return from_image(crop(to_image(a), CropBox{l, t, r, b})); },
      py::arg("image"), py::arg("left"), py::arg("top"), py::arg("right"), py::arg("bottom"));
  m.def(
      "otsu",
      [](const Array& a) {
        const OtsuResult r = otsu(to_image(a));
        return py::make_tuple(from_image(r.binary), r.threshold);
      },
      py::arg("image"), "Returns (binary image, threshold bin).");
  m.def(
      "apply_pipeline",
      [](const Array& a, const std::vector<std::string>& steps) {
        return from_image(apply_pipeline(to_image(a), parse_pipeline(steps)));
      },
      py::arg("image"), py::arg("steps"));
  m.def("default_plate_roi", [] {
    const CropBox b = default_plate_roi();
    return py::make_tuple(b.left, b.top, b.right, b.bottom);
  });

  // platesynth
  m.def(
      "sample_label",
      [](const std::string& pattern, std::uint64_t seed) {
        Rng rng(seed);
        return sample_label(PlateGrammar{pattern, CharSet::latin_default()}, rng);
      },
      py::arg("pattern") = "DDLLLDD", py::arg("seed") = 0);
  m.def(
      "render_plate",
      [](const std::string& label, std::uint64_t seed, bool degraded) {
        Rng rng(seed);
        return from_image(render_plate(label, degraded ? RenderParams::degraded() : RenderParams{}, rng).image);
      },
      py::arg("label"), py::arg("seed") = 0, py::arg("degraded") = false);
  m.def(
      "generate_dataset",
      [](std::size_t count, const std::string& out_dir, std::uint64_t seed, const std::string& pattern, bool degraded) {
        const Manifest man = generate_dataset(count, PlateGrammar{pattern, CharSet::latin_default()},
                                              degraded ? RenderParams::degraded() : RenderParams{}, out_dir, seed);
        std::vector<std::pair<std::string, std::string>> rows;
        for (const ManifestEntry& e : man.entries) rows.emplace_back(e.filename, e.label);
        return rows;
      },
      py::arg("count"), py::arg("out_dir"), py::arg("seed") = 0, py::arg("pattern") = "DDLLLDD",
      py::arg("degraded") = true);

  // lprnet
  py::class_<LprNet>(m, "LprNet")
      .def(py::init([](const std::string& charset, std::size_t width_divisor, std::uint64_t seed, double dropout) {
             return LprNet(LprNetConfig{CharSet::from_utf8(charset), dropout, width_divisor, seed});
           }),
           py::arg("charset") = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ", py::arg("width_divisor") = 1,
           py::arg("seed") = 0, py::arg("dropout") = 0.5)
      .def_static("load", &LprNet::load, py::arg("path"))
      .def("save", &LprNet::save, py::arg("path"))
      .def("parameter_count", &LprNet::parameter_count)
      .def("charset", [](const LprNet& n) { return n.charset().str(); })
      .def(
          "forward", [](LprNet& n, const Array& batch) { return from_tensor(n.forward(to_batch(batch), Mode::infer)); },
          py::arg("batch"), "Inference logits of shape (n, classes, 1, T).")
      .def(
          "recognize", [](LprNet& n, const Array& batch) { return n.recognize(to_batch(batch)); }, py::arg("batch"));

  // cli
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line; returns (exit_code, stdout, stderr).");
}
