// Copyright (c) the licomp project authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "licomp/common.hpp"

namespace licomp {

enum class Colorspace { kRgb, kYCbCr, kGray };
enum class Depth { kU8, kF32 };  // kU8: integral samples in [0,255]; kF32: unit range

// Decoded pixel planes. Samples are stored as float regardless of depth; for
// kU8 every value is an integer in [0,255].
struct Image {
  int width = 0;
  int height = 0;
  Colorspace colorspace = Colorspace::kRgb;
  Depth depth = Depth::kU8;
  std::vector<std::vector<float>> planes;

  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  int channels() const { return static_cast<int>(planes.size()); }

  static Image make(int w, int h, int channels, Colorspace cs, Depth depth = Depth::kU8) {
    Image img;
    img.width = w;
    img.height = h;
    img.colorspace = cs;
    img.depth = depth;
    img.planes.assign(channels, std::vector<float>(static_cast<size_t>(w) * h, 0.0f));
    return img;
  }
};

inline const char* colorspace_name(Colorspace cs) {
  switch (cs) {
    case Colorspace::kRgb:
      return "RGB";
    case Colorspace::kYCbCr:
      return "YCbCr";
    case Colorspace::kGray:
      return "Gray";
  }
  return "?";
}

namespace detail {

inline float clamp_sample(float v, Depth depth) {
  float hi = depth == Depth::kU8 ? 255.0f : 1.0f;
  return std::min(hi, std::max(0.0f, v));
}

inline float quantize_sample(float v, Depth depth) {
  if (depth == Depth::kU8) return std::round(clamp_sample(v, depth));
  return clamp_sample(v, depth);
}

}  // namespace detail

// BT.601 full-range conversion. Supported pairs: RGB<->YCbCr, RGB<->Gray.
inline Image convert_colorspace(const Image& img, Colorspace target) {
  if (img.colorspace == target)
    fail(ErrorKind::kDimension, "convert_colorspace: source already in target colorspace");
  const float mid = img.depth == Depth::kU8 ? 128.0f : 0.5f;
  const size_t n = img.pixel_count();

  auto out3 = [&](Colorspace cs) { return Image::make(img.width, img.height, 3, cs, img.depth); };

  if (img.colorspace == Colorspace::kRgb && target == Colorspace::kYCbCr) {
    Image out = out3(Colorspace::kYCbCr);
    for (size_t i = 0; i < n; ++i) {
      float r = img.planes[0][i], g = img.planes[1][i], b = img.planes[2][i];
      float y = 0.299f * r + 0.587f * g + 0.114f * b;
      float cb = mid - 0.168736f * r - 0.331264f * g + 0.5f * b;
      float cr = mid + 0.5f * r - 0.418688f * g - 0.081312f * b;
      out.planes[0][i] = detail::quantize_sample(y, img.depth);
      out.planes[1][i] = detail::quantize_sample(cb, img.depth);
      out.planes[2][i] = detail::quantize_sample(cr, img.depth);
    }
    return out;
  }
  if (img.colorspace == Colorspace::kYCbCr && target == Colorspace::kRgb) {
    Image out = out3(Colorspace::kRgb);
    for (size_t i = 0; i < n; ++i) {
      float y = img.planes[0][i];
      float cb = img.planes[1][i] - mid;
      float cr = img.planes[2][i] - mid;
      out.planes[0][i] = detail::quantize_sample(y + 1.402f * cr, img.depth);
      out.planes[1][i] = detail::quantize_sample(y - 0.344136f * cb - 0.714136f * cr, img.depth);
      out.planes[2][i] = detail::quantize_sample(y + 1.772f * cb, img.depth);
    }
    return out;
  }
  if (img.colorspace == Colorspace::kRgb && target == Colorspace::kGray) {
    Image out = Image::make(img.width, img.height, 1, Colorspace::kGray, img.depth);
    for (size_t i = 0; i < n; ++i) {
      float y = 0.299f * img.planes[0][i] + 0.587f * img.planes[1][i] + 0.114f * img.planes[2][i];
      out.planes[0][i] = detail::quantize_sample(y, img.depth);
    }
    return out;
  }
  if (img.colorspace == Colorspace::kGray && target == Colorspace::kRgb) {
    Image out = out3(Colorspace::kRgb);
    for (int c = 0; c < 3; ++c) out.planes[c] = img.planes[0];
    return out;
  }
  fail(ErrorKind::kDimension, std::string("convert_colorspace: unsupported pair ") +
                                  colorspace_name(img.colorspace) + " -> " +
                                  colorspace_name(target));
}

}  // namespace licomp
