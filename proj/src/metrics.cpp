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

#include "lpr/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "lpr/charset.hpp"
#include "lpr/error.hpp"

namespace lpr {

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::tp: return "TP";
    case Outcome::tn1: return "TN1";
    case Outcome::tn2: return "TN2";
  }
  return "?";
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const std::u32string s = utf8_to_u32(a), t = utf8_to_u32(b);
  std::vector<std::size_t> prev(t.size() + 1), cur(t.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

Outcome classify_prediction(const PredictionRecord& record) {
  if (record.ground_truth == record.predicted) return Outcome::tp;
  return utf8_to_u32(record.ground_truth).size() == utf8_to_u32(record.predicted).size() ? Outcome::tn2
                                                                                          : Outcome::tn1;
}

EvalReport evaluate(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw ParameterError("cannot evaluate an empty record set");
  EvalReport r;
  std::size_t edits = 0;
  for (const PredictionRecord& rec : records) {
    if (rec.ground_truth.empty()) throw ParameterError("record '" + rec.sample_id + "' has an empty ground truth");
    switch (classify_prediction(rec)) {
      case Outcome::tp: ++r.tp; break;
      case Outcome::tn1: ++r.tn1; break;
      case Outcome::tn2: ++r.tn2; break;
    }
    edits += levenshtein(rec.ground_truth, rec.predicted);
  }
  r.n = records.size();
  r.accuracy = static_cast<double>(r.tp) / static_cast<double>(r.n);
  r.mean_levenshtein = static_cast<double>(edits) / static_cast<double>(r.n);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["mean_levenshtein"] = mean_levenshtein;
  j["tp"] = tp;
  j["tn1"] = tn1;
  j["tn2"] = tn2;
  j["n"] = n;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "accuracy,mean_levenshtein,tp,tn1,tn2,n\n"
      << accuracy << ',' << mean_levenshtein << ',' << tp << ',' << tn1 << ',' << tn2 << ',' << n << '\n';
  return out.str();
}

LengthSplit length_split_table(const std::vector<PredictionRecord>& records) {
  LengthSplit s;
  for (const PredictionRecord& rec : records) {
    const Outcome o = classify_prediction(rec);
    if (o == Outcome::tn2) ++s.same_length_errors;
    if (o == Outcome::tn1) ++s.different_length_errors;
  }
  s.total_errors = s.same_length_errors + s.different_length_errors;
  return s;
}

std::string length_split_csv(const LengthSplit& split) {
  return "same_length_errors,different_length_errors,total_errors\n" + std::to_string(split.same_length_errors) +
         "," + std::to_string(split.different_length_errors) + "," + std::to_string(split.total_errors) + "\n";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

namespace {

// Reads one RFC 4180 row starting at pos; quoted fields may hold commas,
// quotes and line breaks.
std::vector<std::string> csv_row(std::string_view text, std::size_t& pos, std::size_t lineno) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c != '"') {
        fields.back() += c;
      } else if (pos < text.size() && text[pos] == '"') {
        fields.back() += '"';
        ++pos;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw IoError("unterminated quote in records row " + std::to_string(lineno));
  return fields;
}

}  // namespace

std::string records_csv(const std::vector<PredictionRecord>& records) {
  std::string out = "sample_id,ground_truth,predicted,outcome,levenshtein\n";
  for (const PredictionRecord& r : records) {
    out += csv_field(r.sample_id) + "," + csv_field(r.ground_truth) + "," + csv_field(r.predicted) + "," +
           outcome_name(classify_prediction(r)) + "," + std::to_string(levenshtein(r.ground_truth, r.predicted)) +
           "\n";
  }
  return out;
}

std::vector<PredictionRecord> parse_records_csv(std::string_view text) {
  std::size_t pos = 0;
  const auto header = csv_row(text, pos, 1);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "ground_truth" || header[2] != "predicted") {
    throw IoError("records file lacks the expected header");
  }
  std::vector<PredictionRecord> out;
  std::size_t lineno = 1;
  while (pos < text.size()) {
    ++lineno;
    const auto fields = csv_row(text, pos, lineno);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() < 3) throw IoError("malformed records row " + std::to_string(lineno));
    out.push_back({fields[1], fields[2], fields[0]});
  }
  return out;
}

void save_records(const std::vector<PredictionRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write records: " + path);
  out << records_csv(records);
  if (!out) throw IoError("failed writing records: " + path);
}

std::vector<PredictionRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open records: " + path);
  return parse_records_csv(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

}  // namespace lpr
