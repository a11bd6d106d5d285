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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpr/charset.hpp"
#include "lpr/imaging.hpp"
#include "lpr/metrics.hpp"
#include "lpr/platesynth.hpp"

namespace lpr {

/// External recognizer invoked through `sh -c`. The single {input}
/// placeholder is replaced by the shell-quoted image path.
struct EngineSpec {
  std::string command_template;
  long timeout_ms = 10000;
  bool postprocess = false;  // upper-case and drop characters outside `charset`
  CharSet charset = CharSet::latin_default();

  void validate() const;
};

class EngineError : public std::runtime_error {
 public:
  EngineError(const std::string& what, std::string stderr_text)
      : std::runtime_error(what), stderr_text_(std::move(stderr_text)) {}
  const std::string& stderr_text() const { return stderr_text_; }

 private:
  std::string stderr_text_;
};

class EngineTimeout : public EngineError {
 public:
  using EngineError::EngineError;
};

// Raised when more than half of the samples fail.
class BenchAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineOutput {
  std::string text;
  bool empty = false;  // nothing left after trimming / filtering
};

std::string shell_quote(const std::string& s);
std::string normalize_engine_text(const std::string& raw, bool postprocess, const CharSet& charset);

// Runs the engine on one image. Throws EngineError on a nonzero exit
// (carrying stderr) and EngineTimeout when the deadline passes.
EngineOutput recognize_external(const EngineSpec& spec, const std::string& image_path);

// True when the template's leading executable resolves (path or $PATH).
bool engine_available(const EngineSpec& spec);

struct SampleFailure {
  std::string sample_id;
  std::string message;
};

struct BenchResult {
  std::vector<PredictionRecord> records;  // manifest order, failures as empty predictions
  std::vector<SampleFailure> failures;
};

struct BenchOptions {
  std::size_t jobs = 1;
  std::optional<std::string> temp_root;  // defaults to the system temp directory
};

// Preprocesses each manifest image into a private temp directory (keeping
// its file name), runs the engine and collects records. An empty pipeline
// hands the original files to the engine untouched.
BenchResult bench_external(const EngineSpec& spec, const Manifest& manifest,
                           const std::vector<PreprocessStep>& pipeline, const BenchOptions& options = {});

}  // namespace lpr
