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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lpr/error.hpp"
#include "lpr/tensor.hpp"

namespace lpr {

/// Three-channel image stored as a (1, 3, H, W) tensor with values in [0, 1].
struct Image {
  Tensor4 pixels;
  std::optional<std::string> source_path;

  Image() : pixels(Shape4{1, 3, 1, 1}) {}
  explicit Image(Tensor4 px, std::optional<std::string> path = std::nullopt);
  static Image filled(std::size_t width, std::size_t height, double r, double g, double b);

  std::size_t width() const { return pixels.shape().w; }
  std::size_t height() const { return pixels.shape().h; }
};

/// PNG or PPM decode failure; offset is the byte position where decoding stopped.
class DecodeError : public IoError {
 public:
  DecodeError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// 8-bit grey, grey+alpha, palette, RGB and RGBA. Alpha is dropped.
Image decode_png(std::string_view bytes);
std::string encode_png(const Image& image);
Image load_png(const std::string& path);
void save_png(const Image& image, const std::string& path);

// Binary P6 portable pixmap, maxval 255.
Image decode_ppm(std::string_view bytes);
std::string encode_ppm(const Image& image);
Image load_ppm(const std::string& path);
void save_ppm(const Image& image, const std::string& path);

// Dispatches on the file signature.
Image load_image(const std::string& path);

/// Fractional region (left, top, right, bottom) in [0, 1].
struct CropBox {
  double left = 0.0, top = 0.0, right = 1.0, bottom = 1.0;
  void validate() const;
};

// Exact box-filter reduction: each output pixel is the area-weighted mean of
// its source footprint. Upscaling is refused.
Image resize_area(const Image& image, std::size_t target_w, std::size_t target_h);
Image rgb_to_bgr(const Image& image);
// Pixel bounds are rounded half-up.
Image crop(const Image& image, const CropBox& box);

struct OtsuResult {
  Image binary;
  int threshold;  // grey bins <= threshold map to 0
};

// Grey = channel mean, 256-bin histogram, maximal between-class variance
// (lowest threshold on ties). Constant images map to all zeros.
OtsuResult otsu(const Image& image);
Image binarize_otsu(const Image& image);
// Between-class variance of the split at a given threshold bin.
double between_class_variance(const std::vector<std::size_t>& histogram, int threshold);
std::vector<std::size_t> grey_histogram(const Image& image);

// ---------------------------------------------------------------------------
// Preprocessing pipelines ("crop", "resize", "bgr", "binarize")

enum class StepKind { crop, resize, bgr, binarize };

struct PreprocessStep {
  StepKind kind;
  CropBox box;  // crop only
  std::size_t width = 94, height = 24;  // resize only
};

// Default plate ROI for the built-in synthetic renderer: excludes the
// border and the country band on the left.
CropBox default_plate_roi();

// Accepts "crop", "crop:l,t,r,b", "resize", "resize:WxH", "bgr", "binarize".
PreprocessStep parse_step(std::string_view text);
std::string format_step(const PreprocessStep& step);
std::vector<PreprocessStep> parse_pipeline(const std::vector<std::string>& steps);
Image apply_pipeline(const Image& image, const std::vector<PreprocessStep>& steps);

}  // namespace lpr
