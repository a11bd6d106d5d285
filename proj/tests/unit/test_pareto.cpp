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

#include <filesystem>
#include <regex>
#include <sstream>

#include "lpr/pareto.hpp"
#include "lpr/rng.hpp"
#include "support/oracles.hpp"

using namespace lpr;
namespace fs = std::filesystem;

TEST(Tally, PositionalDifferences) {
  EXPECT_TRUE(tally_same_length_errors({{"AB", "AB", ""}}).fp_counts.empty());
  const CharErrorTally t = tally_same_length_errors({{"AB", "AC", ""}, {"AB", "A", ""}});
  EXPECT_EQ(t.fp_counts, (std::map<char32_t, std::size_t>{{U'C', 1}}));
  EXPECT_EQ(t.fn_counts, (std::map<char32_t, std::size_t>{{U'B', 1}}));
  const CharErrorTally z = tally_same_length_errors({{"0O0", "OO0", ""}});
  EXPECT_EQ(z.fp_counts, (std::map<char32_t, std::size_t>{{U'O', 1}}));
  EXPECT_EQ(z.fn_counts, (std::map<char32_t, std::size_t>{{U'0', 1}}));
}

TEST(Tally, FpAndFnTotalsMatch) {
  Rng rng(1);
  std::vector<PredictionRecord> recs;
  for (int i = 0; i < 300; ++i) {
    std::string a, b;
    const std::size_t la = 1 + uniform_index(rng, 5), lb = uniform_index(rng, 2) ? la : 1 + uniform_index(rng, 5);
    for (std::size_t k = 0; k < la; ++k) a += "0O8B"[uniform_index(rng, 4)];
    for (std::size_t k = 0; k < lb; ++k) b += "0O8B"[uniform_index(rng, 4)];
    recs.push_back({a, b, ""});
  }
  const CharErrorTally t = tally_same_length_errors(recs);
  std::size_t fp = 0, fn = 0;
  for (const auto& [c, n] : t.fp_counts) fp += n;
  for (const auto& [c, n] : t.fn_counts) fn += n;
  EXPECT_EQ(fp, fn);
  EXPECT_GT(fp, 0u);
}

TEST(Build, ArithmeticOrderingAndErrors) {
  const ParetoTable t = build_pareto({{U'B', 3}, {U'A', 6}, {U'C', 1}});
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0].character, U'A');
  EXPECT_DOUBLE_EQ(t.rows[0].percent, 60);
  EXPECT_DOUBLE_EQ(t.rows[1].percent, 30);
  EXPECT_DOUBLE_EQ(t.rows[2].percent, 10);
  EXPECT_DOUBLE_EQ(t.rows[1].cumulative_percent, 90);
  EXPECT_DOUBLE_EQ(t.rows[2].cumulative_percent, 100);
  const ParetoTable one = build_pareto({{U'7', 4}});
  EXPECT_EQ(one.rows[0].percent, 100.0);
  const ParetoTable tie = build_pareto({{U'Z', 2}, {U'0', 2}, {U'O', 17}});
  EXPECT_EQ(tie.rows[0].character, U'O');
  EXPECT_EQ(tie.rows[1].character, U'0');
  EXPECT_THROW(build_pareto({}), EmptyAnalysisError);
  EXPECT_THROW(build_pareto({{U'A', 0}}), EmptyAnalysisError);
}

TEST(Build, InvariantsOnRandomCounts) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<char32_t, std::size_t> counts;
    for (int i = 0; i < 1 + trial % 20; ++i) counts[U'A' + uniform_index(rng, 26)] += 1 + uniform_index(rng, 30);
    const ParetoTable t = build_pareto(counts);
    ASSERT_EQ(t.rows.size(), counts.size());
    double sum = 0.0, prev_cum = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (i) EXPECT_LE(t.rows[i].count, t.rows[i - 1].count);
      EXPECT_EQ(counts.at(t.rows[i].character), t.rows[i].count);
      sum += t.rows[i].percent;
      EXPECT_GE(t.rows[i].cumulative_percent, prev_cum);
      EXPECT_NEAR(t.rows[i].cumulative_percent, sum, 1e-9);
      prev_cum = t.rows[i].cumulative_percent;
    }
    EXPECT_NEAR(sum, 100.0, 1e-9);
    EXPECT_NEAR(t.rows.back().cumulative_percent, 100.0, 1e-9);
    EXPECT_EQ(build_pareto(counts), t);
  }
}

TEST(Chart, SvgStructureAndCsvRoundTrip) {
  const ParetoTable t = build_pareto({{U'A', 6}, {U'B', 3}, {U'0', 1}});
  const std::string svg = pareto_svg(t, "False Positive Characters");
  std::size_t bars = 0;
  for (std::size_t p = svg.find("class=\"bar\""); p != std::string::npos; p = svg.find("class=\"bar\"", p + 1)) ++bars;
  EXPECT_EQ(bars, 3u);
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, std::regex("class=\"cumulative\"[^>]*points=\"([^\"]*)\"")));
  std::istringstream pts(m[1].str());
  std::vector<double> ys;
  for (std::string pair; pts >> pair;) ys.push_back(std::stod(pair.substr(pair.find(',') + 1)));
  ASSERT_EQ(ys.size(), 3u);
  for (std::size_t i = 1; i < ys.size(); ++i) EXPECT_LE(ys[i], ys[i - 1]);  // svg y grows downward
  EXPECT_EQ(parse_pareto_csv(pareto_csv(t)), t);
  const fs::path dir = oracle::scratch_dir("pareto");
  emit_pareto_chart(t, "FN", (dir / "fn.svg").string());
  EXPECT_TRUE(fs::exists(dir / "fn.svg"));
  EXPECT_EQ(read_pareto_csv((dir / "fn.csv").string()), t);
  fs::remove_all(dir);
}
