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

#include "lpr/platesynth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace lpr {

namespace fs = std::filesystem;

namespace {

const std::map<char32_t, GlyphBitmap>& font() {
  static const std::map<char32_t, GlyphBitmap> table = {
    {U'0', {0x3C, 0x66, 0x66, 0x66, 0x6E, 0x6E, 0x76, 0x76, 0x66, 0x66, 0x66, 0x3C}},
    {U'1', {0x18, 0x38, 0x78, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x7E}},
    {U'2', {0x3C, 0x66, 0xC3, 0x03, 0x06, 0x0C, 0x18, 0x30, 0x60, 0xC0, 0xC0, 0xFF}},
    {U'3', {0x7E, 0xC3, 0x03, 0x03, 0x06, 0x3C, 0x06, 0x03, 0x03, 0x03, 0xC3, 0x7E}},
    {U'4', {0x06, 0x0E, 0x1E, 0x36, 0x66, 0xC6, 0xC6, 0xFF, 0x06, 0x06, 0x06, 0x06}},
    {U'5', {0xFF, 0xC0, 0xC0, 0xC0, 0xFE, 0x03, 0x03, 0x03, 0x03, 0x03, 0xC3, 0x7E}},
    {U'6', {0x3E, 0x60, 0xC0, 0xC0, 0xFE, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0x7E}},
    {U'7', {0xFF, 0x03, 0x03, 0x06, 0x06, 0x0C, 0x0C, 0x18, 0x18, 0x30, 0x30, 0x30}},
    {U'8', {0x7E, 0xC3, 0xC3, 0xC3, 0x66, 0x3C, 0x66, 0xC3, 0xC3, 0xC3, 0xC3, 0x7E}},
    {U'9', {0x7E, 0xC3, 0xC3, 0xC3, 0xC3, 0x7F, 0x03, 0x03, 0x03, 0x03, 0x06, 0x7C}},
    {U'A', {0x18, 0x3C, 0x66, 0xC3, 0xC3, 0xC3, 0xFF, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3}},
    {U'B', {0xFE, 0xC3, 0xC3, 0xC3, 0xC6, 0xFC, 0xC6, 0xC3, 0xC3, 0xC3, 0xC3, 0xFE}},
    {U'C', {0x3E, 0x63, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0x63, 0x3E}},
    {U'D', {0xF8, 0xCC, 0xC6, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC6, 0xCC, 0xF8}},
    {U'E', {0xFF, 0xC0, 0xC0, 0xC0, 0xC0, 0xFC, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xFF}},
    {U'F', {0xFF, 0xC0, 0xC0, 0xC0, 0xC0, 0xFC, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0}},
    {U'G', {0x3E, 0x63, 0xC0, 0xC0, 0xC0, 0xCF, 0xC3, 0xC3, 0xC3, 0xC3, 0x63, 0x3E}},
    {U'H', {0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xFF, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3}},
    {U'I', {0x7E, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x7E}},
    {U'J', {0x0F, 0x06, 0x06, 0x06, 0x06, 0x06, 0x06, 0x06, 0x06, 0xC6, 0xC6, 0x7C}},
    {U'K', {0xC3, 0xC6, 0xCC, 0xD8, 0xF0, 0xE0, 0xF0, 0xD8, 0xCC, 0xC6, 0xC3, 0xC3}},
    {U'L', {0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xFF}},
    {U'M', {0xC3, 0xE7, 0xFF, 0xDB, 0xDB, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3}},
    {U'N', {0xC3, 0xE3, 0xE3, 0xF3, 0xD3, 0xDB, 0xCB, 0xCF, 0xC7, 0xC7, 0xC3, 0xC3}},
    {U'O', {0x3C, 0x66, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0x66, 0x3C}},
    {U'P', {0xFE, 0xC3, 0xC3, 0xC3, 0xC3, 0xFE, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0, 0xC0}},
    {U'Q', {0x3C, 0x66, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xDB, 0xCE, 0x66, 0x3B}},
    {U'R', {0xFE, 0xC3, 0xC3, 0xC3, 0xC3, 0xFE, 0xF0, 0xD8, 0xCC, 0xC6, 0xC3, 0xC3}},
    {U'S', {0x7E, 0xC3, 0xC0, 0xC0, 0x60, 0x3C, 0x06, 0x03, 0x03, 0x03, 0xC3, 0x7E}},
    {U'T', {0xFF, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18}},
    {U'U', {0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0x66, 0x3C}},
    {U'V', {0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0x66, 0x66, 0x66, 0x3C, 0x3C, 0x18}},
    {U'W', {0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xC3, 0xDB, 0xDB, 0xDB, 0xFF, 0xE7, 0xC3}},
    {U'X', {0xC3, 0xC3, 0x66, 0x66, 0x3C, 0x18, 0x18, 0x3C, 0x66, 0x66, 0xC3, 0xC3}},
    {U'Y', {0xC3, 0xC3, 0x66, 0x66, 0x3C, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18, 0x18}},
    {U'Z', {0xFF, 0x03, 0x06, 0x06, 0x0C, 0x18, 0x18, 0x30, 0x60, 0x60, 0xC0, 0xFF}},
  };
  return table;
}

// Decoration geometry in canvas pixels.
constexpr std::size_t kBorderInset = 4;
constexpr std::size_t kBorderWidth = 6;
constexpr std::size_t kBandLeft = 14;
constexpr std::size_t kBandRight = 94;
constexpr std::size_t kTextMargin = 14;
constexpr std::size_t kBandCell = 4;
constexpr double kBandColour[3] = {0.05, 0.2, 0.65};

bool glyph_bit(const GlyphBitmap& g, std::size_t col, std::size_t row) {
  return (g[row] >> (kGlyphCols - 1 - col)) & 1U;
}

void fill_rect(Tensor4& px, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, const double rgb[3]) {
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) px(0, c, y, x) = rgb[c];
}

void draw_decorations(Tensor4& px, const RenderParams& p) {
  const double ink[3] = {p.foreground, p.foreground, p.foreground};
  const std::size_t w = p.canvas_w, h = p.canvas_h;
  const std::size_t a = kBorderInset, b = kBorderInset + kBorderWidth;
  fill_rect(px, a, a, w - a, b, ink);
  fill_rect(px, a, h - b, w - a, h - a, ink);
  fill_rect(px, a, a, b, h - a, ink);
  fill_rect(px, w - b, a, w - a, h - a, ink);

  const std::size_t band_bottom = h - kTextMargin;
  fill_rect(px, kBandLeft, kTextMargin, kBandRight, band_bottom, kBandColour);
  const double white[3] = {1.0, 1.0, 1.0};
  const std::size_t gw = kGlyphCols * kBandCell, gh = kGlyphRows * kBandCell;
  const std::size_t gap = kBandCell;
  const std::size_t left = kBandLeft + (kBandRight - kBandLeft - 2 * gw - gap) / 2;
  const std::size_t top = band_bottom - gh - 3 * kBandCell;
  const char32_t code[2] = {U'T', U'R'};
  for (std::size_t i = 0; i < 2; ++i) {
    const GlyphBitmap& g = font().at(code[i]);
    const std::size_t gx = left + i * (gw + gap);
    for (std::size_t row = 0; row < kGlyphRows; ++row)
      for (std::size_t col = 0; col < kGlyphCols; ++col)
        if (glyph_bit(g, col, row)) {
          fill_rect(px, gx + col * kBandCell, top + row * kBandCell, gx + (col + 1) * kBandCell,
                    top + (row + 1) * kBandCell, white);
        }
  }
}

}  // namespace

std::optional<GlyphBitmap> glyph_for(char32_t ch) {
  const auto it = font().find(ch);
  if (it == font().end()) return std::nullopt;
  return it->second;
}

RenderParams RenderParams::degraded() {
  RenderParams p;
  p.max_rotation_deg = 1.5;
  p.max_translation_px = 6.0;
  p.noise_std = 0.05;
  return p;
}

void RenderParams::validate() const {
  if (cell_px == 0) throw ParameterError("cell_px must be positive");
  if (decorations && (canvas_w < 2 * kBandRight || canvas_h < 4 * kTextMargin)) {
    throw ParameterError("canvas too small for plate decorations");
  }
  if (canvas_w == 0 || canvas_h == 0) throw ParameterError("canvas must be non-empty");
  if (!(max_rotation_deg >= 0.0) || max_rotation_deg > 45.0) {
    throw ParameterError("max_rotation_deg must lie in [0, 45]");
  }
  if (!(max_translation_px >= 0.0)) throw ParameterError("max_translation_px must be >= 0");
  if (!(noise_std >= 0.0)) throw ParameterError("noise_std must be >= 0");
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(background) || !unit(foreground)) throw ParameterError("intensities must lie in [0, 1]");
}

PixelBox text_area(const RenderParams& params) {
  if (!params.decorations) return {0, 0, params.canvas_w, params.canvas_h};
  return {kBandRight + 6, kTextMargin, params.canvas_w - kTextMargin, params.canvas_h - kTextMargin};
}

std::vector<PixelBox> glyph_boxes(std::size_t label_length, const RenderParams& params) {
  params.validate();
  const PixelBox area = text_area(params);
  const std::size_t gw = kGlyphCols * params.cell_px, gh = kGlyphRows * params.cell_px;
  const std::size_t area_w = area.x1 - area.x0, area_h = area.y1 - area.y0;
  if (label_length == 0) return {};
  const std::size_t total = label_length * gw + (label_length - 1) * params.glyph_gap;
  if (total > area_w || gh > area_h) {
    throw ParameterError("label of " + std::to_string(label_length) + " characters does not fit a " +
                         std::to_string(area_w) + "x" + std::to_string(area_h) + " text area");
  }
  const std::size_t x = area.x0 + (area_w - total) / 2;
  const std::size_t y = area.y0 + (area_h - gh) / 2;
  std::vector<PixelBox> boxes;
  for (std::size_t i = 0; i < label_length; ++i) {
    const std::size_t gx = x + i * (gw + params.glyph_gap);
    boxes.push_back({gx, y, gx + gw, y + gh});
  }
  return boxes;
}

std::string sample_label(const PlateGrammar& grammar, Rng& rng) {
  if (grammar.pattern.empty()) throw ParameterError("plate grammar pattern is empty");
  std::u32string digits, letters;
  for (char32_t ch : grammar.charset.chars()) {
    if (ch >= U'0' && ch <= U'9') digits.push_back(ch);
    if (ch >= U'A' && ch <= U'Z') letters.push_back(ch);
  }
  std::u32string out;
  for (char32_t sym : utf8_to_u32(grammar.pattern)) {
    if (sym == U'D' || sym == U'L') {
      const std::u32string& pool = sym == U'D' ? digits : letters;
      if (pool.empty()) {
        throw ParameterError(std::string("charset has no ") + (sym == U'D' ? "digits" : "letters") +
                             " for pattern '" + grammar.pattern + "'");
      }
      out.push_back(pool[uniform_index(rng, pool.size())]);
    } else {
      if (!grammar.charset.contains(sym)) {
        throw ParameterError("pattern literal '" + u32_to_utf8(std::u32string(1, sym)) + "' is not in the charset");
      }
      out.push_back(sym);
    }
  }
  return u32_to_utf8(out);
}

PlateSample render_plate(std::string_view label, const RenderParams& params, Rng& rng) {
  params.validate();
  const std::u32string text = utf8_to_u32(label);
  std::vector<GlyphBitmap> glyphs;
  for (char32_t ch : text) {
    const auto g = glyph_for(ch);
    if (!g) throw ParameterError("no glyph for character '" + u32_to_utf8(std::u32string(1, ch)) + "'");
    glyphs.push_back(*g);
  }
  const std::vector<PixelBox> boxes = glyph_boxes(text.size(), params);

  Tensor4 px(Shape4{1, 3, params.canvas_h, params.canvas_w}, params.background);
  if (params.decorations) draw_decorations(px, params);

  constexpr double kPi = 3.14159265358979323846;
  const double theta = (2.0 * uniform01(rng) - 1.0) * params.max_rotation_deg * kPi / 180.0;
  const double dx = (2.0 * uniform01(rng) - 1.0) * params.max_translation_px;
  const double dy = (2.0 * uniform01(rng) - 1.0) * params.max_translation_px;

  if (!boxes.empty()) {
    const double bx0 = static_cast<double>(boxes.front().x0), bx1 = static_cast<double>(boxes.back().x1);
    const double by0 = static_cast<double>(boxes.front().y0), by1 = static_cast<double>(boxes.front().y1);
    const double cx = 0.5 * (bx0 + bx1), cy = 0.5 * (by0 + by1);
    const double cs = std::cos(theta), sn = std::sin(theta);

    // Forward-map the text corners to find the region to scan.
    double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
    for (double x : {bx0, bx1})
      for (double y : {by0, by1}) {
        const double fx = cs * (x - cx) - sn * (y - cy) + cx + dx;
        const double fy = sn * (x - cx) + cs * (y - cy) + cy + dy;
        lo_x = std::min(lo_x, fx), hi_x = std::max(hi_x, fx);
        lo_y = std::min(lo_y, fy), hi_y = std::max(hi_y, fy);
      }
    if (lo_x < 0.0 || lo_y < 0.0 || hi_x > static_cast<double>(params.canvas_w) ||
        hi_y > static_cast<double>(params.canvas_h)) {
      throw ParameterError("jittered label leaves the canvas");
    }
    const auto sx0 = static_cast<std::size_t>(std::floor(lo_x));
    const auto sy0 = static_cast<std::size_t>(std::floor(lo_y));
    const auto sx1 = std::min(params.canvas_w, static_cast<std::size_t>(std::ceil(hi_x)));
    const auto sy1 = std::min(params.canvas_h, static_cast<std::size_t>(std::ceil(hi_y)));
    const double cell = static_cast<double>(params.cell_px);
    const double pitch = static_cast<double>(kGlyphCols * params.cell_px + params.glyph_gap);

    auto ink_at = [&](double x, double y) {
      // Inverse rotation about the text centre.
      const double ux = x - cx - dx, uy = y - cy - dy;
      const double sx = cs * ux + sn * uy + cx;
      const double sy = -sn * ux + cs * uy + cy;
      if (sx < bx0 || sx >= bx1 || sy < by0 || sy >= by1) return false;
      const auto gi = static_cast<std::size_t>((sx - bx0) / pitch);
      if (gi >= boxes.size()) return false;
      const double gx = sx - static_cast<double>(boxes[gi].x0);
      if (gx >= static_cast<double>(kGlyphCols) * cell) return false;
      const auto col = static_cast<std::size_t>(gx / cell);
      const auto row = static_cast<std::size_t>((sy - by0) / cell);
      return glyph_bit(glyphs[gi], std::min(col, kGlyphCols - 1), std::min(row, kGlyphRows - 1));
    };

    for (std::size_t y = sy0; y < sy1; ++y)
      for (std::size_t x = sx0; x < sx1; ++x) {
        int hits = 0;
        for (double oy : {0.25, 0.75})
          for (double ox : {0.25, 0.75}) hits += ink_at(static_cast<double>(x) + ox, static_cast<double>(y) + oy);
        if (hits == 0) continue;
        const double cov = hits / 4.0;
        for (std::size_t c = 0; c < 3; ++c) px(0, c, y, x) = px(0, c, y, x) * (1.0 - cov) + params.foreground * cov;
      }
  }

  if (params.noise_std > 0.0) {
    for (double& v : px.data()) v = std::clamp(v + params.noise_std * standard_normal(rng), 0.0, 1.0);
  }
  return PlateSample{Image(std::move(px)), std::string(label), 0};
}

std::string Manifest::image_path(const ManifestEntry& entry) const {
  return (fs::path(directory) / "images" / entry.filename).string();
}

std::string Manifest::manifest_path() const { return (fs::path(directory) / "manifest.csv").string(); }

void write_manifest(const Manifest& manifest) {
  const std::string path = manifest.manifest_path();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + tmp);
    out << "filename,label\n";
    for (const ManifestEntry& e : manifest.entries) out << e.filename << ',' << e.label << '\n';
    if (!out) throw IoError("failed writing manifest: " + tmp);
  }
  fs::rename(tmp, path);
}

Manifest read_manifest(const std::string& path) {
  fs::path p(path);
  Manifest m;
  if (fs::is_directory(p)) {
    m.directory = p.string();
    p /= "manifest.csv";
  } else {
    m.directory = p.parent_path().string();
  }
  std::ifstream in(p);
  if (!in) throw IoError("cannot open manifest: " + p.string());
  std::string line;
  if (!std::getline(in, line) || line != "filename,label") {
    throw IoError("manifest " + p.string() + " lacks the 'filename,label' header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw IoError("malformed manifest row " + std::to_string(lineno) + " in " + p.string());
    }
    m.entries.push_back({line.substr(0, comma), line.substr(comma + 1)});
  }
  return m;
}

std::string label_from_filename(std::string_view filename) {
  const std::string name = fs::path(std::string(filename)).filename().string();
  const std::size_t us = name.rfind('_');
  if (us == std::string::npos) throw ParameterError("file name carries no label: " + name);
  return name.substr(0, us);
}

Manifest generate_dataset(std::size_t count, const PlateGrammar& grammar, const RenderParams& params,
                          const std::string& out_dir, std::uint64_t seed) {
  if (count == 0) throw ParameterError("dataset count must be at least 1");
  params.validate();
  Manifest m;
  m.directory = out_dir;
  const fs::path images = fs::path(out_dir) / "images";
  std::vector<fs::path> written;
  try {
    fs::create_directories(images);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t s = derive_seed(seed, i);
      Rng rng(s);
      const std::string label = sample_label(grammar, rng);
      const PlateSample sample = render_plate(label, params, rng);
      const std::string name = label + "_" + std::to_string(s) + ".png";
      const fs::path target = images / name;
      written.push_back(target);
      save_png(sample.image, target.string());
      m.entries.push_back({name, label});
    }
    write_manifest(m);
  } catch (...) {
    std::error_code ec;
    for (const fs::path& f : written) fs::remove(f, ec);
    fs::remove(m.manifest_path() + ".tmp", ec);
    fs::remove(m.manifest_path(), ec);
    throw;
  }
  return m;
}

}  // namespace lpr
