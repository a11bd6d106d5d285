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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lpr/charset.hpp"
#include "lpr/imaging.hpp"
#include "lpr/rng.hpp"

namespace lpr {

/// Label pattern: 'D' is any digit of the charset, 'L' any upper-case
/// letter of the charset, anything else is copied literally.
struct PlateGrammar {
  std::string pattern = "DDLLLDD";
  CharSet charset = CharSet::latin_default();
};

// Embedded 8x12 bitmap font; rows top to bottom, bit 7 is the left column.
constexpr std::size_t kGlyphCols = 8;
constexpr std::size_t kGlyphRows = 12;
using GlyphBitmap = std::array<std::uint8_t, kGlyphRows>;
// Nullopt for characters the font does not cover.
std::optional<GlyphBitmap> glyph_for(char32_t ch);

struct RenderParams {
  std::size_t canvas_w = 1025;
  std::size_t canvas_h = 218;
  std::size_t cell_px = 12;      // canvas pixels per font cell
  std::size_t glyph_gap = 16;    // pixels between adjacent glyphs
  double max_rotation_deg = 0.0;
  double max_translation_px = 0.0;
  double noise_std = 0.0;
  double background = 0.95;
  double foreground = 0.05;
  bool decorations = true;  // border and left country band

  // Moderate jitter and noise used for training data.
  static RenderParams degraded();
  void validate() const;
};

/// Pixel box [x0, x1) x [y0, y1).
struct PixelBox {
  std::size_t x0, y0, x1, y1;
};

// Undistorted layout of the label's glyphs on the canvas. Throws
// ParameterError when the label does not fit the text area.
std::vector<PixelBox> glyph_boxes(std::size_t label_length, const RenderParams& params);
// Region the label may occupy; decorations stay outside it.
PixelBox text_area(const RenderParams& params);

struct PlateSample {
  Image image;
  std::string label;
  std::uint64_t seed = 0;
};

std::string sample_label(const PlateGrammar& grammar, Rng& rng);
// Jitter is drawn first (rotation, dx, dy), then per-pixel noise.
PlateSample render_plate(std::string_view label, const RenderParams& params, Rng& rng);

struct ManifestEntry {
  std::string filename;  // relative to <dir>/images
  std::string label;
};

struct Manifest {
  std::string directory;  // dataset root containing manifest.csv and images/
  std::vector<ManifestEntry> entries;

  std::string image_path(const ManifestEntry& entry) const;
  std::string manifest_path() const;
};

// Writes <out_dir>/images/<label>_<seed>.png and <out_dir>/manifest.csv.
// Sample i uses seed derive_seed(seed, i). On failure every file written by
// this call is removed before the exception propagates.
Manifest generate_dataset(std::size_t count, const PlateGrammar& grammar, const RenderParams& params,
                          const std::string& out_dir, std::uint64_t seed);

// Reads <dir>/manifest.csv, or the given .csv file directly.
Manifest read_manifest(const std::string& path);
void write_manifest(const Manifest& manifest);

// Label encoded in a "<label>_<seed>.png" file name (text before the last '_').
std::string label_from_filename(std::string_view filename);

}  // namespace lpr
