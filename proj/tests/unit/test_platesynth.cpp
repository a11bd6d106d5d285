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

#include <cctype>
#include <cmath>
#include <filesystem>

#include "lpr/error.hpp"
#include "lpr/platesynth.hpp"
#include "support/oracles.hpp"

using namespace lpr;
namespace fs = std::filesystem;

TEST(Grammar, StructureAndLiterals) {
  PlateGrammar g;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::string s = sample_label(g, rng);
    ASSERT_EQ(s.size(), 7u);
    for (std::size_t p : {0, 1, 5, 6}) EXPECT_TRUE(std::isdigit(static_cast<unsigned char>(s[p]))) << s;
    for (std::size_t p : {2, 3, 4}) EXPECT_TRUE(std::isupper(static_cast<unsigned char>(s[p]))) << s;
  }
  PlateGrammar lit{"AB", CharSet::latin_default()};
  EXPECT_EQ(sample_label(lit, rng), "AB");
  Rng a(5), b(5);
  EXPECT_EQ(sample_label(g, a), sample_label(g, b));
  PlateGrammar digits_only{"LD", CharSet::from_utf8("0123")};
  EXPECT_THROW(sample_label(digits_only, rng), ParameterError);
}

TEST(Grammar, DigitFrequencyNearUniform) {
  PlateGrammar g;
  Rng rng(2);
  std::array<std::size_t, 10> freq{};
  for (int i = 0; i < 10000; ++i) {
    const std::string s = sample_label(g, rng);
    for (std::size_t p : {0, 1, 5, 6}) ++freq[static_cast<std::size_t>(s[p] - '0')];
  }
  for (std::size_t d = 0; d < 10; ++d) EXPECT_NEAR(static_cast<double>(freq[d]), 4000.0, 0.15 * 4000.0) << d;
}

TEST(Font, CoversDefaultCharset) {
  const CharSet cs = CharSet::latin_default();
  for (char32_t c : cs.chars()) EXPECT_TRUE(glyph_for(c).has_value());
  EXPECT_NE(*glyph_for(U'0'), *glyph_for(U'O'));
  EXPECT_FALSE(glyph_for(U'a').has_value());
}

TEST(Render, DeterministicBlankAndLayout) {
  RenderParams p;
  Rng r1(3), r2(99);
  EXPECT_EQ(render_plate("12ABC34", p, r1).image.pixels, render_plate("12ABC34", p, r2).image.pixels);
  p.decorations = false;
  const Image blank = render_plate("", p, r1).image;
  for (double v : blank.pixels.data()) ASSERT_EQ(v, p.background);
  EXPECT_THROW(render_plate(std::string(60, 'A'), RenderParams{}, r1), ParameterError);
  EXPECT_THROW(render_plate("a", RenderParams{}, r1), ParameterError);
  const auto boxes = glyph_boxes(7, RenderParams{});
  const PixelBox area = text_area(RenderParams{});
  for (const PixelBox& b : boxes) {
    EXPECT_GE(b.x0, area.x0);
    EXPECT_LE(b.x1, area.x1);
  }
}

TEST(Render, NoiseStatisticsAndRange) {
  RenderParams p;
  p.decorations = false;
  p.background = 0.5;
  p.noise_std = 0.05;
  Rng rng(4);
  const Image im = render_plate("", p, rng).image;
  double s = 0.0, ss = 0.0;
  for (double v : im.pixels.data()) {
    s += v - 0.5;
    ss += (v - 0.5) * (v - 0.5);
  }
  const double n = static_cast<double>(im.pixels.numel());
  EXPECT_NEAR(std::sqrt(ss / n - (s / n) * (s / n)), 0.05, 0.005);
  RenderParams harsh = RenderParams::degraded();
  harsh.noise_std = 0.4;
  const Image h = render_plate("06XYZ99", harsh, rng).image;
  for (double v : h.pixels.data()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(Dataset, RoundTripManifestAndDeterminism) {
  const fs::path dir = oracle::scratch_dir("synth");
  const Manifest m = generate_dataset(12, PlateGrammar{}, RenderParams{}, (dir / "a").string(), 7);
  ASSERT_EQ(m.entries.size(), 12u);
  for (const ManifestEntry& e : m.entries) {
    EXPECT_EQ(label_from_filename(e.filename), e.label);
    EXPECT_TRUE(fs::exists(m.image_path(e)));
  }
  const Manifest back = read_manifest((dir / "a").string());
  ASSERT_EQ(back.entries.size(), 12u);
  EXPECT_EQ(back.entries[3].filename, m.entries[3].filename);
  generate_dataset(12, PlateGrammar{}, RenderParams{}, (dir / "b").string(), 7);
  EXPECT_EQ(oracle::slurp(dir / "a" / "manifest.csv"), oracle::slurp(dir / "b" / "manifest.csv"));
  EXPECT_EQ(oracle::slurp(m.image_path(m.entries[5])), oracle::slurp(dir / "b" / "images" / m.entries[5].filename));
  const Manifest one = generate_dataset(1, PlateGrammar{}, RenderParams{}, (dir / "c").string(), 1);
  EXPECT_EQ(one.entries.size(), 1u);
  EXPECT_THROW(generate_dataset(0, PlateGrammar{}, RenderParams{}, (dir / "d").string(), 1), ParameterError);
  EXPECT_THROW(read_manifest((dir / "missing").string()), IoError);
  fs::remove_all(dir);
}

TEST(Dataset, FailedRunLeavesNoManifest) {
  const fs::path dir = oracle::scratch_dir("synth-fail");
  PlateGrammar g{"DDLLLDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDDD", CharSet::latin_default()};
  EXPECT_ANY_THROW(generate_dataset(3, g, RenderParams{}, dir.string(), 1));
  EXPECT_FALSE(fs::exists(dir / "manifest.csv"));
  fs::remove_all(dir);
}
