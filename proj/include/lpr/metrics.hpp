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
#include <string>
#include <string_view>
#include <vector>

namespace lpr {

struct PredictionRecord {
  std::string ground_truth;
  std::string predicted;
  std::string sample_id;
};

enum class Outcome { tp, tn1, tn2 };
const char* outcome_name(Outcome o);

/// Eq.-1 style report: accuracy = tp / (tp + tn1 + tn2).
struct EvalReport {
  std::size_t tp = 0, tn1 = 0, tn2 = 0, n = 0;
  double accuracy = 0.0;
  double mean_levenshtein = 0.0;

  std::string to_json() const;  // exactly the six fields
  std::string to_csv() const;   // header row plus one value row
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Unit-cost edit distance over UTF-8 code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Lengths are compared in code points.
Outcome classify_prediction(const PredictionRecord& record);

// Throws ParameterError on an empty record list or an empty ground truth.
EvalReport evaluate(const std::vector<PredictionRecord>& records);

struct LengthSplit {
  std::size_t same_length_errors = 0;       // TN2
  std::size_t different_length_errors = 0;  // TN1
  std::size_t total_errors = 0;
  friend bool operator==(const LengthSplit&, const LengthSplit&) = default;
};

LengthSplit length_split_table(const std::vector<PredictionRecord>& records);
std::string length_split_csv(const LengthSplit& split);

// "sample_id,ground_truth,predicted,outcome,levenshtein" rows.
// Quotes a field when it holds a comma, quote or line break.
std::string csv_field(const std::string& s);
std::string records_csv(const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> parse_records_csv(std::string_view text);
void save_records(const std::vector<PredictionRecord>& records, const std::string& path);
std::vector<PredictionRecord> load_records(const std::string& path);

}  // namespace lpr
