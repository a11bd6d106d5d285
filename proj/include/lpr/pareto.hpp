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

#include <map>
#include <string>
#include <vector>

#include "lpr/error.hpp"
#include "lpr/metrics.hpp"

namespace lpr {

/// Per-character confusions from same-length (TN2) errors.
struct CharErrorTally {
  std::map<char32_t, std::size_t> fp_counts;  // predicted character that was wrong
  std::map<char32_t, std::size_t> fn_counts;  // target character that was missed
};

CharErrorTally tally_same_length_errors(const std::vector<PredictionRecord>& records);

struct ParetoRow {
  char32_t character;
  std::size_t count;
  double percent;
  double cumulative_percent;
  friend bool operator==(const ParetoRow&, const ParetoRow&) = default;
};

struct ParetoTable {
  std::vector<ParetoRow> rows;
  friend bool operator==(const ParetoTable&, const ParetoTable&) = default;
};

class EmptyAnalysisError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

// Rows sorted by count descending, then code point ascending. The final
// cumulative percentage is exactly 100.
ParetoTable build_pareto(const std::map<char32_t, std::size_t>& counts);

std::string pareto_csv(const ParetoTable& table);
ParetoTable parse_pareto_csv(const std::string& text);
ParetoTable read_pareto_csv(const std::string& path);

// Bars are <rect class="bar">, the cumulative line is one
// <polyline class="cumulative"> with a vertex per row.
std::string pareto_svg(const ParetoTable& table, const std::string& title);

// Writes <path> (SVG) and the same path with a .csv extension.
void emit_pareto_chart(const ParetoTable& table, const std::string& title, const std::string& path);

}  // namespace lpr
