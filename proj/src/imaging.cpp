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

#include "lpr/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <png.h>

namespace lpr {

namespace {

std::uint8_t quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open image for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing image: " + path);
}

// libpng reports errors through a callback; we record the message and the
// number of bytes handed out so far, then longjmp back to the caller.
struct PngReader {
  std::string_view bytes;
  std::size_t pos = 0;
  std::string error;
};

void png_read_mem(png_structp png, png_bytep out, png_size_t len) {
  auto* r = static_cast<PngReader*>(png_get_io_ptr(png));
  if (r->bytes.size() - r->pos < len) {
    r->pos = r->bytes.size();
    png_error(png, "unexpected end of data");
  }
  std::memcpy(out, r->bytes.data() + r->pos, len);
  r->pos += len;
}

void png_on_error(png_structp png, png_const_charp msg) {
  auto* r = static_cast<PngReader*>(png_get_error_ptr(png));
  if (r) r->error = msg;
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

void png_write_mem(png_structp png, png_bytep data, png_size_t len) {
  static_cast<std::string*>(png_get_io_ptr(png))->append(reinterpret_cast<const char*>(data), len);
}

void png_flush_mem(png_structp) {}

}  // namespace

Image::Image(Tensor4 px, std::optional<std::string> path)
    : pixels(std::move(px)), source_path(std::move(path)) {
  if (pixels.shape().n != 1 || pixels.shape().c != 3) {
    throw DimensionError("image tensors must be (1, 3, H, W), got " + pixels.shape().str());
  }
}

Image Image::filled(std::size_t width, std::size_t height, double r, double g, double b) {
  Tensor4 t(Shape4{1, 3, height, width});
  const double rgb[3] = {r, g, b};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) t(0, c, y, x) = rgb[c];
  return Image(std::move(t));
}

DecodeError::DecodeError(const std::string& what, std::size_t offset)
    : IoError(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

// ---------------------------------------------------------------------------
// PNG

Image decode_png(std::string_view bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw DecodeError("missing PNG signature", 0);
  }
  PngReader reader{bytes, 0, {}};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &reader, png_on_error, png_on_warning);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> buffer;
  png_uint_32 width = 0, height = 0;
  std::size_t channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("invalid PNG: " + reader.error, reader.pos);
  }
  png_set_read_fn(png, &reader, png_read_mem);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int colour = png_get_color_type(png, info);
  if (depth != 8) png_error(png, "only 8-bit PNG is supported");
  if (colour == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) png_set_interlace_handling(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Tensor4 t(Shape4{1, 3, height, width});
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const std::uint8_t* px = rows[y] + x * channels;
      for (std::size_t c = 0; c < 3; ++c) t(0, c, y, x) = (channels <= 2 ? px[0] : px[c]) / 255.0;
    }
  return Image(std::move(t));
}

std::string encode_png(const Image& image) {
  const std::size_t w = image.width(), h = image.height();
  std::vector<std::uint8_t> buffer(w * h * 3);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) buffer[(y * w + x) * 3 + c] = quantize(image.pixels(0, c, y, x));

  std::string out;
  PngReader err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_on_error, png_on_warning);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed: " + err.error);
  }
  png_set_write_fn(png, &out, png_write_mem, png_flush_mem);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_write_info(png, info);
  for (std::size_t y = 0; y < h; ++y) png_write_row(png, buffer.data() + y * w * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image load_png(const std::string& path) {
  Image img = decode_png(read_file(path));
  img.source_path = path;
  return img;
}

void save_png(const Image& image, const std::string& path) { write_file(path, encode_png(image)); }

// ---------------------------------------------------------------------------
// PPM

Image decode_ppm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> std::size_t {
    skip_space();
    const std::size_t start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      ++pos;
    }
    if (pos == start) throw DecodeError("expected a number in PPM header", start);
    return v;
  };
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P6") throw DecodeError("missing P6 magic", 0);
  pos = 2;
  const std::size_t w = read_int();
  const std::size_t h = read_int();
  const std::size_t maxval = read_int();
  if (w == 0 || h == 0) throw DecodeError("PPM has zero extent", pos);
  if (maxval != 255) throw DecodeError("only maxval 255 PPM is supported", pos);
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DecodeError("PPM header not terminated", pos);
  }
  ++pos;
  if (bytes.size() - pos < w * h * 3) throw DecodeError("truncated PPM pixel data", bytes.size());
  Tensor4 t(Shape4{1, 3, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        t(0, c, y, x) = static_cast<unsigned char>(bytes[pos + (y * w + x) * 3 + c]) / 255.0;
  return Image(std::move(t));
}

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  for (std::size_t y = 0; y < image.height(); ++y)
    for (std::size_t x = 0; x < image.width(); ++x)
      for (std::size_t c = 0; c < 3; ++c) out.push_back(static_cast<char>(quantize(image.pixels(0, c, y, x))));
  return out;
}

Image load_ppm(const std::string& path) {
  Image img = decode_ppm(read_file(path));
  img.source_path = path;
  return img;
}

void save_ppm(const Image& image, const std::string& path) { write_file(path, encode_ppm(image)); }

Image load_image(const std::string& path) {
  const std::string bytes = read_file(path);
  Image img = bytes.size() >= 2 && bytes.compare(0, 2, "P6") == 0 ? decode_ppm(bytes) : decode_png(bytes);
  img.source_path = path;
  return img;
}

// ---------------------------------------------------------------------------
// Geometry

namespace {

struct Tap {
  std::size_t index;
  double weight;
};

// For each output cell, the source cells it overlaps and the overlap length
// normalized by the footprint length.
std::vector<std::vector<Tap>> area_taps(std::size_t src, std::size_t dst) {
  std::vector<std::vector<Tap>> taps(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t o = 0; o < dst; ++o) {
    const double lo = static_cast<double>(o) * scale;
    const double hi = static_cast<double>(o + 1) * scale;
    const auto first = static_cast<std::size_t>(std::floor(lo));
    const auto last = std::min(src, static_cast<std::size_t>(std::ceil(hi)));
    for (std::size_t i = first; i < last; ++i) {
      const double overlap = std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
      if (overlap > 0.0) taps[o].push_back({i, overlap / scale});
    }
  }
  return taps;
}

}  // namespace

Image resize_area(const Image& image, std::size_t target_w, std::size_t target_h) {
  const std::size_t w = image.width(), h = image.height();
  if (target_w == 0 || target_h == 0) throw ParameterError("resize target must be at least 1x1");
  if (target_w > w || target_h > h) {
    throw ParameterError("resize_area only reduces: " + std::to_string(w) + "x" + std::to_string(h) +
                         " -> " + std::to_string(target_w) + "x" + std::to_string(target_h));
  }
  if (target_w == w && target_h == h) return image;
  const auto xt = area_taps(w, target_w);
  const auto yt = area_taps(h, target_h);
  Tensor4 horiz(Shape4{1, 3, h, target_w});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t ox = 0; ox < target_w; ++ox) {
        double acc = 0.0;
        for (const Tap& t : xt[ox]) acc += t.weight * image.pixels(0, c, y, t.index);
        horiz(0, c, y, ox) = acc;
      }
  Tensor4 out(Shape4{1, 3, target_h, target_w});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t oy = 0; oy < target_h; ++oy)
      for (std::size_t ox = 0; ox < target_w; ++ox) {
        double acc = 0.0;
        for (const Tap& t : yt[oy]) acc += t.weight * horiz(0, c, t.index, ox);
        out(0, c, oy, ox) = std::clamp(acc, 0.0, 1.0);
      }
  return Image(std::move(out), image.source_path);
}

Image rgb_to_bgr(const Image& image) {
  Image out = image;
  const std::size_t plane = image.width() * image.height();
  auto d = out.pixels.data();
  std::swap_ranges(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(plane),
                   d.begin() + static_cast<std::ptrdiff_t>(2 * plane));
  return out;
}

void CropBox::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(left) || !in_unit(top) || !in_unit(right) || !in_unit(bottom)) {
    throw ParameterError("crop box coordinates must lie in [0, 1]");
  }
  if (!(left < right) || !(top < bottom)) throw ParameterError("crop box is empty or inverted");
}

Image crop(const Image& image, const CropBox& box) {
  box.validate();
  auto to_px = [](double frac, std::size_t extent) {
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(extent) + 0.5));
  };
  const std::size_t x0 = to_px(box.left, image.width()), x1 = to_px(box.right, image.width());
  const std::size_t y0 = to_px(box.top, image.height()), y1 = to_px(box.bottom, image.height());
  if (x1 <= x0 || y1 <= y0) throw ParameterError("crop box resolves to zero pixels");
  Tensor4 out(Shape4{1, 3, y1 - y0, x1 - x0});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) out(0, c, y - y0, x - x0) = image.pixels(0, c, y, x);
  return Image(std::move(out), image.source_path);
}

// ---------------------------------------------------------------------------
// Otsu

namespace {

int grey_bin(const Image& image, std::size_t y, std::size_t x) {
  const double g = (image.pixels(0, 0, y, x) + image.pixels(0, 1, y, x) + image.pixels(0, 2, y, x)) / 3.0;
  return static_cast<int>(std::lround(std::clamp(g, 0.0, 1.0) * 255.0));
}

}  // namespace

std::vector<std::size_t> grey_histogram(const Image& image) {
  std::vector<std::size_t> hist(256, 0);
  for (std::size_t y = 0; y < image.height(); ++y)
    for (std::size_t x = 0; x < image.width(); ++x) ++hist[static_cast<std::size_t>(grey_bin(image, y, x))];
  return hist;
}

double between_class_variance(const std::vector<std::size_t>& histogram, int threshold) {
  double w0 = 0.0, w1 = 0.0, s0 = 0.0, s1 = 0.0;
  for (int b = 0; b < static_cast<int>(histogram.size()); ++b) {
    const auto n = static_cast<double>(histogram[static_cast<std::size_t>(b)]);
    if (b <= threshold) {
      w0 += n;
      s0 += n * b;
    } else {
      w1 += n;
      s1 += n * b;
    }
  }
  if (w0 == 0.0 || w1 == 0.0) return 0.0;
  const double total = w0 + w1;
  const double diff = s0 / w0 - s1 / w1;
  return (w0 / total) * (w1 / total) * diff * diff;
}

OtsuResult otsu(const Image& image) {
  const std::vector<std::size_t> hist = grey_histogram(image);
  int best_t = 255;  // no valid split: everything falls in the low class
  double best = 0.0;
  for (int t = 0; t < 255; ++t) {
    const double var = between_class_variance(hist, t);
    if (var > best) {
      best = var;
      best_t = t;
    }
  }
  Tensor4 out(Shape4{1, 3, image.height(), image.width()});
  for (std::size_t y = 0; y < image.height(); ++y)
    for (std::size_t x = 0; x < image.width(); ++x) {
      const double v = grey_bin(image, y, x) > best_t ? 1.0 : 0.0;
      for (std::size_t c = 0; c < 3; ++c) out(0, c, y, x) = v;
    }
  return {Image(std::move(out), image.source_path), best_t};
}

Image binarize_otsu(const Image& image) { return otsu(image).binary; }

// ---------------------------------------------------------------------------
// Pipelines

CropBox default_plate_roi() { return CropBox{0.1, 0.06, 0.975, 0.94}; }

PreprocessStep parse_step(std::string_view text) {
  const std::size_t colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string args = colon == std::string_view::npos ? "" : std::string(text.substr(colon + 1));
  PreprocessStep step{StepKind::bgr, default_plate_roi()};
  if (name == "crop") {
    step.kind = StepKind::crop;
    if (!args.empty()) {
      std::istringstream in(args);
      char c1 = 0, c2 = 0, c3 = 0;
      in >> step.box.left >> c1 >> step.box.top >> c2 >> step.box.right >> c3 >> step.box.bottom;
      if (!in || c1 != ',' || c2 != ',' || c3 != ',') {
        throw ParameterError("crop expects crop:left,top,right,bottom, got '" + std::string(text) + "'");
      }
      step.box.validate();
    }
  } else if (name == "resize") {
    step.kind = StepKind::resize;
    if (!args.empty()) {
      std::istringstream in(args);
      char x = 0;
      in >> step.width >> x >> step.height;
      if (!in || x != 'x' || step.width == 0 || step.height == 0) {
        throw ParameterError("resize expects resize:WxH, got '" + std::string(text) + "'");
      }
    }
  } else if (name == "bgr") {
    step.kind = StepKind::bgr;
  } else if (name == "binarize") {
    step.kind = StepKind::binarize;
  } else {
    throw ParameterError("unknown preprocessing step '" + std::string(text) + "'");
  }
  return step;
}

std::string format_step(const PreprocessStep& step) {
  std::ostringstream out;
  switch (step.kind) {
    case StepKind::crop:
      out.precision(17);
      out << "crop:" << step.box.left << ',' << step.box.top << ',' << step.box.right << ','
          << step.box.bottom;
      break;
    case StepKind::resize: out << "resize:" << step.width << 'x' << step.height; break;
    case StepKind::bgr: out << "bgr"; break;
    case StepKind::binarize: out << "binarize"; break;
  }
  return out.str();
}

std::vector<PreprocessStep> parse_pipeline(const std::vector<std::string>& steps) {
  std::vector<PreprocessStep> out;
  for (const std::string& s : steps) out.push_back(parse_step(s));
  return out;
}

Image apply_pipeline(const Image& image, const std::vector<PreprocessStep>& steps) {
  Image cur = image;
  for (const PreprocessStep& step : steps) {
    switch (step.kind) {
      case StepKind::crop: cur = crop(cur, step.box); break;
      case StepKind::resize: cur = resize_area(cur, step.width, step.height); break;
      case StepKind::bgr: cur = rgb_to_bgr(cur); break;
      case StepKind::binarize: cur = binarize_otsu(cur); break;
    }
  }
  return cur;
}

}  // namespace lpr
