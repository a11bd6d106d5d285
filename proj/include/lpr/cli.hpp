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
#include <string>
#include <string_view>
#include <vector>

#include "lpr/error.hpp"
#include "lpr/imaging.hpp"
#include "lpr/lprnet.hpp"

namespace lpr::cli {

/// Everything a run needs. Loaded from a JSON file, then overridden by flags.
struct RunConfig {
  std::string charset = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::string grammar = "DDLLLDD";
  std::uint64_t seed = 0;
  std::string out = "out";

  // gen
  std::size_t count = 1000;
  double noise_std = 0.05;
  double max_rotation_deg = 1.5;
  double max_translation_px = 6.0;

  // train / eval / extbench inputs
  std::string manifest;
  std::string checkpoint;
  std::string records;

  // train
  std::size_t iterations = 3000;
  std::size_t batch_size = 32;
  double base_lr = 1e-3;
  double drop_factor = 10.0;
  std::size_t drop_every = 2000;
  double grad_noise = 1e-3;
  std::size_t width_divisor = 2;
  double dropout = 0.5;
  std::size_t checkpoint_every = 0;

  // Unset means the command default: resize+bgr for train/eval, raw for extbench.
  std::optional<std::vector<std::string>> pipeline;

  // eval
  std::size_t exhibits = 5;

  // extbench
  std::string engine;
  long timeout_ms = 10000;
  bool postprocess = false;
  std::size_t jobs = 1;
  std::string label;

  // Canonical JSON (sorted keys, every field present).
  std::string normalized() const;
  static RunConfig parse(std::string_view json_text);
  static RunConfig load(const std::string& path);

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Bad flags, bad config values, missing inputs: exit code 2.
class UsageError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

// Reads an image, applies the pipeline and checks the (1, 3, 24, 94) result.
Tensor4 load_network_input(const std::string& path, const std::vector<PreprocessStep>& pipeline);

// Entry point shared by the executable and the tests; args exclude argv[0].
// Returns 0 on success, 1 on runtime failure, 2 on usage/config errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lpr::cli
