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

#include "lpr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "lpr/extocr.hpp"
#include "lpr/metrics.hpp"
#include "lpr/optim.hpp"
#include "lpr/pareto.hpp"
#include "lpr/platesynth.hpp"

namespace lpr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["charset"] = c.charset;
  j["grammar"] = c.grammar;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["count"] = c.count;
  j["noise_std"] = c.noise_std;
  j["max_rotation_deg"] = c.max_rotation_deg;
  j["max_translation_px"] = c.max_translation_px;
  j["manifest"] = c.manifest;
  j["checkpoint"] = c.checkpoint;
  j["records"] = c.records;
  j["iterations"] = c.iterations;
  j["batch_size"] = c.batch_size;
  j["base_lr"] = c.base_lr;
  j["drop_factor"] = c.drop_factor;
  j["drop_every"] = c.drop_every;
  j["grad_noise"] = c.grad_noise;
  j["width_divisor"] = c.width_divisor;
  j["dropout"] = c.dropout;
  j["checkpoint_every"] = c.checkpoint_every;
  j["pipeline"] = c.pipeline ? json(*c.pipeline) : json(nullptr);
  j["exhibits"] = c.exhibits;
  j["engine"] = c.engine;
  j["timeout_ms"] = c.timeout_ms;
  j["postprocess"] = c.postprocess;
  j["jobs"] = c.jobs;
  j["label"] = c.label;
  return j;
}

template <class T>
void take(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("config key '") + key + "': " + e.what());
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string RunConfig::normalized() const { return to_json(*this).dump(2) + "\n"; }

RunConfig RunConfig::parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const json known = to_json(RunConfig{});
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw UsageError("unknown config key '" + key + "'");
  }
  RunConfig c;
  take(j, "charset", c.charset);
  take(j, "grammar", c.grammar);
  take(j, "seed", c.seed);
  take(j, "out", c.out);
  take(j, "count", c.count);
  take(j, "noise_std", c.noise_std);
  take(j, "max_rotation_deg", c.max_rotation_deg);
  take(j, "max_translation_px", c.max_translation_px);
  take(j, "manifest", c.manifest);
  take(j, "checkpoint", c.checkpoint);
  take(j, "records", c.records);
  take(j, "iterations", c.iterations);
  take(j, "batch_size", c.batch_size);
  take(j, "base_lr", c.base_lr);
  take(j, "drop_factor", c.drop_factor);
  take(j, "drop_every", c.drop_every);
  take(j, "grad_noise", c.grad_noise);
  take(j, "width_divisor", c.width_divisor);
  take(j, "dropout", c.dropout);
  take(j, "checkpoint_every", c.checkpoint_every);
  if (j.contains("pipeline") && !j["pipeline"].is_null()) {
    std::vector<std::string> p;
    take(j, "pipeline", p);
    c.pipeline = p;
  }
  take(j, "exhibits", c.exhibits);
  take(j, "engine", c.engine);
  take(j, "timeout_ms", c.timeout_ms);
  take(j, "postprocess", c.postprocess);
  take(j, "jobs", c.jobs);
  take(j, "label", c.label);
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("config file not found: " + path);
  return parse(read_text(path));
}

Tensor4 load_network_input(const std::string& path, const std::vector<PreprocessStep>& pipeline) {
  Image img = apply_pipeline(load_image(path), pipeline);
  if (img.width() != kInputWidth || img.height() != kInputHeight) {
    throw ParameterError("pipeline produced " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                         " for " + path + "; the network needs " + std::to_string(kInputWidth) + "x" +
                         std::to_string(kInputHeight));
  }
  return std::move(img.pixels);
}

namespace {

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
};

CharSet charset_of(const RunConfig& c) {
  try {
    return CharSet::from_utf8(c.charset);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
}

std::vector<PreprocessStep> pipeline_of(const RunConfig& c, std::vector<std::string> fallback) {
  try {
    return parse_pipeline(c.pipeline ? *c.pipeline : fallback);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
}

Manifest require_manifest(const RunConfig& c) {
  if (c.manifest.empty()) throw UsageError("no dataset given (--manifest)");
  const fs::path p(c.manifest);
  const fs::path file = fs::is_directory(p) ? p / "manifest.csv" : p;
  if (!fs::is_regular_file(file)) throw UsageError("manifest not found: " + file.string());
  Manifest m = read_manifest(c.manifest);
  if (m.entries.empty()) throw UsageError("manifest has no samples: " + file.string());
  return m;
}

fs::path prepare_out(const RunConfig& c, const std::string& command, const fs::path& dir) {
  fs::create_directories(dir);
  json run;
  run["command"] = command;
  run["seed"] = c.seed;
  run["config"] = to_json(c);
  write_text(dir / "run.json", run.dump(2) + "\n");
  return dir;
}

std::vector<PredictionRecord> predict_manifest(LprNet& net, const Manifest& m,
                                               const std::vector<PreprocessStep>& pipeline) {
  constexpr std::size_t kBatch = 32;
  std::vector<PredictionRecord> records;
  for (std::size_t start = 0; start < m.entries.size(); start += kBatch) {
    const std::size_t n = std::min(kBatch, m.entries.size() - start);
    Tensor4 batch(Shape4{n, kInputChannels, kInputHeight, kInputWidth});
    for (std::size_t i = 0; i < n; ++i) {
      const Tensor4 x = load_network_input(m.image_path(m.entries[start + i]), pipeline);
      std::copy(x.data().begin(), x.data().end(), batch.sample(i).begin());
    }
    const std::vector<std::string> pred = net.recognize(batch);
    for (std::size_t i = 0; i < n; ++i) {
      const ManifestEntry& e = m.entries[start + i];
      records.push_back({e.label, pred[i], e.filename});
    }
  }
  return records;
}

void write_report(const fs::path& dir, const std::vector<PredictionRecord>& records, const EvalReport& report) {
  write_text(dir / "report.json", report.to_json());
  write_text(dir / "report.csv", report.to_csv());
  write_text(dir / "length_split.csv", length_split_csv(length_split_table(records)));
  write_text(dir / "records.csv", records_csv(records));
}

void print_report(std::ostream& out, const EvalReport& r) {
  out << "accuracy " << r.accuracy << "  mean_levenshtein " << r.mean_levenshtein << "  tp " << r.tp << "  tn1 "
      << r.tn1 << "  tn2 " << r.tn2 << "  n " << r.n << "\n";
}

// FP and FN charts plus CSVs; returns false when there is nothing to chart.
bool write_pareto(const fs::path& dir, const std::vector<PredictionRecord>& records, std::ostream& out) {
  const CharErrorTally tally = tally_same_length_errors(records);
  if (tally.fp_counts.empty()) {
    out << "no TN2 errors: nothing to chart\n";
    return false;
  }
  emit_pareto_chart(build_pareto(tally.fp_counts), "False Positive Characters", (dir / "fp_pareto.svg").string());
  emit_pareto_chart(build_pareto(tally.fn_counts), "False Negative Characters", (dir / "fn_pareto.svg").string());
  out << "wrote " << (dir / "fp_pareto.svg").string() << " and " << (dir / "fn_pareto.svg").string() << "\n";
  return true;
}

int cmd_gen(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  if (c.count == 0) throw UsageError("--count must be at least 1");
  PlateGrammar grammar{c.grammar, charset_of(c)};
  RenderParams params;
  params.noise_std = c.noise_std;
  params.max_rotation_deg = c.max_rotation_deg;
  params.max_translation_px = c.max_translation_px;
  try {
    params.validate();
    Rng probe(0);
    (void)sample_label(grammar, probe);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = prepare_out(c, "gen", c.out);
  const Manifest m = generate_dataset(c.count, grammar, params, dir.string(), c.seed);
  std::map<char32_t, std::size_t> freq;
  for (const ManifestEntry& e : m.entries)
    for (char32_t ch : utf8_to_u32(e.label)) ++freq[ch];
  ctx.out << "manifest " << m.manifest_path() << " (" << m.entries.size() << " samples)\n";
  ctx.out << "label character frequencies:";
  for (const auto& [ch, n] : freq) ctx.out << ' ' << u32_to_utf8(std::u32string(1, ch)) << '=' << n;
  ctx.out << "\n";
  return 0;
}

int cmd_train(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const CharSet charset = charset_of(c);
  const auto pipeline = pipeline_of(c, {"resize", "bgr"});
  const Manifest m = require_manifest(c);
  TrainSchedule sched;
  sched.base_lr = c.base_lr;
  sched.drop_factor = c.drop_factor;
  sched.drop_every = c.drop_every;
  sched.total_iters = c.iterations;
  sched.noise_scale = c.grad_noise;
  sched.batch_size = c.batch_size;
  sched.seed = c.seed;
  LprNetConfig net_cfg{charset, c.dropout, c.width_divisor, derive_seed(c.seed, 100)};
  try {
    sched.validate();
    if (c.width_divisor == 0 || 64 % c.width_divisor != 0) throw ParameterError("width_divisor must divide 64");
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = prepare_out(c, "train", c.out);

  std::vector<Tensor4> images;
  std::vector<std::string> labels;
  for (const ManifestEntry& e : m.entries) {
    images.push_back(load_network_input(m.image_path(e), pipeline));
    labels.push_back(e.label);
  }
  const std::vector<TrainSample> samples = make_train_samples(images, labels, charset);
  images.clear();

  LprNet net(net_cfg);
  TrainOptions opts;
  opts.checkpoint_dir = dir.string();
  opts.checkpoint_every = c.checkpoint_every;
  opts.log_path = (dir / "train_log.csv").string();
  opts.progress = &ctx.err;
  const std::vector<TrainRecord> log = train(net, samples, sched, opts);
  net.save((dir / "model.lprb").string());
  ctx.out << "trained " << log.size() << " iterations";
  if (!log.empty()) ctx.out << ", final loss " << log.back().loss;
  ctx.out << "\ncheckpoint " << (dir / "model.lprb").string() << "\n";
  return 0;
}

int cmd_eval(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const auto pipeline = pipeline_of(c, {"resize", "bgr"});
  if (c.checkpoint.empty()) throw UsageError("no checkpoint given (--checkpoint)");
  if (!fs::is_regular_file(c.checkpoint)) throw UsageError("checkpoint not found: " + c.checkpoint);
  const Manifest m = require_manifest(c);
  const fs::path dir = prepare_out(c, "eval", c.out);

  LprNet net = LprNet::load(c.checkpoint);
  const std::vector<PredictionRecord> records = predict_manifest(net, m, pipeline);
  const EvalReport report = evaluate(records);
  write_report(dir, records, report);

  const fs::path ex = dir / "exhibits";
  fs::remove_all(ex);
  fs::create_directories(ex);
  std::string listing = "rank,sample_id,ground_truth,predicted,outcome\n";
  std::size_t shown = 0;
  for (std::size_t i = 0; i < records.size() && shown < c.exhibits; ++i) {
    const PredictionRecord& r = records[i];
    if (classify_prediction(r) == Outcome::tp) continue;
    ++shown;
    const std::string name = std::to_string(shown) + "_" + r.ground_truth + "_as_" +
                             (r.predicted.empty() ? "-" : r.predicted) + ".png";
    fs::copy_file(m.image_path(m.entries[i]), ex / name, fs::copy_options::overwrite_existing);
    listing += std::to_string(shown) + "," + r.sample_id + "," + r.ground_truth + "," + r.predicted + "," +
               outcome_name(classify_prediction(r)) + "\n";
  }
  write_text(ex / "exhibits.csv", listing);
  print_report(ctx.out, report);
  return 0;
}

int cmd_pareto(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const std::string path = c.records.empty() ? (fs::path(c.out) / "records.csv").string() : c.records;
  if (!fs::is_regular_file(path)) throw UsageError("records file not found: " + path);
  const std::vector<PredictionRecord> records = load_records(path);
  const fs::path dir = prepare_out(c, "pareto", c.out);
  write_pareto(dir, records, ctx.out);
  return 0;
}

std::string pipeline_label(const std::vector<PreprocessStep>& steps) {
  if (steps.empty()) return "raw";
  std::string s;
  for (const PreprocessStep& st : steps) {
    if (!s.empty()) s += '+';
    s += format_step(st).substr(0, format_step(st).find(':'));
  }
  return s;
}

int cmd_extbench(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const auto pipeline = pipeline_of(c, {});
  EngineSpec spec{c.engine, c.timeout_ms, c.postprocess, charset_of(c)};
  try {
    spec.validate();
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  if (!engine_available(spec)) throw UsageError("engine executable not found for '" + c.engine + "'");
  const Manifest m = require_manifest(c);
  const std::string label = c.label.empty() ? pipeline_label(pipeline) : c.label;
  const fs::path dir = prepare_out(c, "extbench", fs::path(c.out) / label);

  BenchOptions opts;
  opts.jobs = c.jobs;
  const BenchResult result = bench_external(spec, m, pipeline, opts);
  for (const SampleFailure& f : result.failures) ctx.err << "engine failed on " << f.sample_id << ": " << f.message << "\n";
  std::string failures = "sample_id,message\n";
  for (const SampleFailure& f : result.failures) failures += csv_field(f.sample_id) + "," + csv_field(f.message) + "\n";
  write_text(dir / "failures.csv", failures);

  const EvalReport report = evaluate(result.records);
  write_report(dir, result.records, report);
  write_pareto(dir, result.records, ctx.out);
  ctx.out << "[" << label << "] ";
  print_report(ctx.out, report);
  return 0;
}

struct Override {
  CLI::Option* option;
  std::function<void(RunConfig&)> apply;
};

template <class T>
void bind_option(CLI::App* app, std::vector<Override>& overrides, const std::string& name, T RunConfig::*member,
          const std::string& help) {
  auto store = std::make_shared<T>();
  CLI::Option* o = app->add_option(name, *store, help);
  overrides.push_back({o, [store, member](RunConfig& c) { c.*member = *store; }});
}

void bind_flag(CLI::App* app, std::vector<Override>& overrides, const std::string& name, bool RunConfig::*member,
               const std::string& help) {
  auto store = std::make_shared<bool>(false);
  CLI::Option* o = app->add_flag(name, *store, help);
  overrides.push_back({o, [store, member](RunConfig& c) { c.*member = *store; }});
}

void bind_pipeline(CLI::App* app, std::vector<Override>& overrides) {
  auto store = std::make_shared<std::vector<std::string>>();
  CLI::Option* o = app->add_option("--pipeline", *store,
                                   "Preprocessing steps in order: crop[:l,t,r,b] resize[:WxH] bgr binarize, or 'none'");
  overrides.push_back({o, [store](RunConfig& c) {
                         std::vector<std::string> p = *store;
                         if (p.size() == 1 && p[0] == "none") p.clear();
                         c.pipeline = p;
                       }});
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"License-plate recognition benchmarking toolkit", "lprbench"};
  app.require_subcommand(1);
  std::vector<Override> ov;
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration");
  bind_option(&app, ov, "--seed", &RunConfig::seed, "Master seed");
  bind_option(&app, ov, "--out", &RunConfig::out, "Output directory");
  bind_option(&app, ov, "--charset", &RunConfig::charset, "Recognition alphabet");

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic plate dataset");
  bind_option(gen, ov, "--count", &RunConfig::count, "Number of plates");
  bind_option(gen, ov, "--grammar", &RunConfig::grammar, "Label pattern (D digit, L letter)");
  bind_option(gen, ov, "--noise-std", &RunConfig::noise_std, "Gaussian pixel noise");
  bind_option(gen, ov, "--max-rotation", &RunConfig::max_rotation_deg, "Max glyph rotation in degrees");
  bind_option(gen, ov, "--max-translation", &RunConfig::max_translation_px, "Max glyph shift in pixels");

  CLI::App* trn = app.add_subcommand("train", "Train LPRNet with CTC");
  bind_option(trn, ov, "--manifest", &RunConfig::manifest, "Training dataset directory or manifest.csv");
  bind_option(trn, ov, "--iterations", &RunConfig::iterations, "Total iterations");
  bind_option(trn, ov, "--batch-size", &RunConfig::batch_size, "Batch size");
  bind_option(trn, ov, "--lr", &RunConfig::base_lr, "Base learning rate");
  bind_option(trn, ov, "--drop-factor", &RunConfig::drop_factor, "Learning-rate divisor at each drop");
  bind_option(trn, ov, "--drop-every", &RunConfig::drop_every, "Iterations between drops");
  bind_option(trn, ov, "--grad-noise", &RunConfig::grad_noise, "Gradient noise standard deviation");
  bind_option(trn, ov, "--width-divisor", &RunConfig::width_divisor, "Channel divisor (1 = full network)");
  bind_option(trn, ov, "--dropout", &RunConfig::dropout, "Dropout ratio");
  bind_option(trn, ov, "--checkpoint-every", &RunConfig::checkpoint_every, "Checkpoint period (0: final only)");
  bind_pipeline(trn, ov);

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  bind_option(ev, ov, "--manifest", &RunConfig::manifest, "Test dataset directory or manifest.csv");
  bind_option(ev, ov, "--checkpoint", &RunConfig::checkpoint, "Model checkpoint (.lprb)");
  bind_option(ev, ov, "--exhibits", &RunConfig::exhibits, "Misclassified samples to copy");
  bind_pipeline(ev, ov);

  CLI::App* par = app.add_subcommand("pareto", "Pareto charts of same-length character errors");
  bind_option(par, ov, "--records", &RunConfig::records, "records.csv from eval or extbench");

  CLI::App* ext = app.add_subcommand("extbench", "Benchmark an external OCR engine");
  bind_option(ext, ov, "--manifest", &RunConfig::manifest, "Dataset directory or manifest.csv");
  bind_option(ext, ov, "--engine", &RunConfig::engine, "Command template containing {input}");
  bind_option(ext, ov, "--timeout-ms", &RunConfig::timeout_ms, "Per-image engine timeout");
  bind_flag(ext, ov, "--postprocess", &RunConfig::postprocess, "Upper-case and charset-filter engine output");
  bind_option(ext, ov, "--jobs", &RunConfig::jobs, "Concurrent engine invocations");
  bind_option(ext, ov, "--label", &RunConfig::label, "Report label (defaults to the pipeline)");
  bind_pipeline(ext, ov);

  for (CLI::App* sub : {gen, trn, ev, par, ext}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Context ctx{config_path.empty() ? RunConfig{} : RunConfig::load(config_path), out, err};
    for (const Override& o : ov)
      if (o.option->count() > 0) o.apply(ctx.cfg);
    if (gen->parsed()) return cmd_gen(ctx);
    if (trn->parsed()) return cmd_train(ctx);
    if (ev->parsed()) return cmd_eval(ctx);
    if (par->parsed()) return cmd_pareto(ctx);
    if (ext->parsed()) return cmd_extbench(ctx);
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lpr::cli
