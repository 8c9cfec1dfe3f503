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

#include <cmath>
#include <vector>

#include "licomp/image.hpp"

namespace licomp {

enum class ResampleKernel { kLanczos3, kBicubic, kBox };

namespace detail {

inline double lanczos3(double t) {
  t = std::abs(t);
  if (t < 1e-9) return 1.0;
  if (t >= 3.0) return 0.0;
  double pt = 3.14159265358979323846 * t;
  return 3.0 * std::sin(pt) * std::sin(pt / 3.0) / (pt * pt);
}

// Catmull-Rom cubic (Keys, a = -0.5).
inline double bicubic(double t) {
  t = std::abs(t);
  if (t <= 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

inline double box(double t) { return std::abs(t) <= 0.5 ? 1.0 : 0.0; }

inline double kernel_radius(ResampleKernel k) {
  switch (k) {
    case ResampleKernel::kLanczos3:
      return 3.0;
    case ResampleKernel::kBicubic:
      return 2.0;
    case ResampleKernel::kBox:
      return 0.5;
  }
  return 0.0;
}

inline double kernel_eval(ResampleKernel k, double t) {
  switch (k) {
    case ResampleKernel::kLanczos3:
      return lanczos3(t);
    case ResampleKernel::kBicubic:
      return bicubic(t);
    case ResampleKernel::kBox:
      return box(t);
  }
  return 0.0;
}

struct TapSet {
  int start = 0;
  std::vector<float> weights;
};

// Per-output-pixel filter taps along one axis; the kernel footprint widens by
// in/out when minifying so downscales stay antialiased. Weights sum to 1,
// which preserves constant images.
inline std::vector<TapSet> make_taps(int in_n, int out_n, ResampleKernel k) {
  std::vector<TapSet> taps(out_n);
  double scale = static_cast<double>(out_n) / in_n;
  double dilate = scale < 1.0 ? 1.0 / scale : 1.0;
  double radius = kernel_radius(k) * dilate;
  for (int o = 0; o < out_n; ++o) {
    double center = (o + 0.5) / scale - 0.5;
    int lo = static_cast<int>(std::ceil(center - radius - 1e-9));
    int hi = static_cast<int>(std::floor(center + radius + 1e-9));
    double sum = 0.0;
    std::vector<double> w;
    for (int s = lo; s <= hi; ++s) {
      double v = kernel_eval(k, (s - center) / dilate);
      w.push_back(v);
      sum += v;
    }
    TapSet& t = taps[o];
    t.start = lo;
    t.weights.resize(w.size());
    for (size_t i = 0; i < w.size(); ++i)
      t.weights[i] = static_cast<float>(sum != 0.0 ? w[i] / sum : 0.0);
  }
  return taps;
}

}  // namespace detail

// Separable resampling to exact output dimensions, edge-clamped. Same-size
// passes are exact copies (interpolating kernels are identities on the grid).
inline Image resample_to(const Image& img, int out_w, int out_h, ResampleKernel kernel) {
  if (out_w < 1 || out_h < 1)
    fail(ErrorKind::kDimension, "resample: output dimensions must be at least 1x1");
  if (out_w == img.width && out_h == img.height) return img;

  Image out = Image::make(out_w, out_h, img.channels(), img.colorspace, img.depth);
  auto htaps = detail::make_taps(img.width, out_w, kernel);
  auto vtaps = detail::make_taps(img.height, out_h, kernel);

  std::vector<float> tmp(static_cast<size_t>(out_w) * img.height);
  for (int c = 0; c < img.channels(); ++c) {
    const auto& src = img.planes[c];
    // horizontal pass
    for (int y = 0; y < img.height; ++y) {
      const float* row = src.data() + static_cast<size_t>(y) * img.width;
      for (int x = 0; x < out_w; ++x) {
        const auto& t = htaps[x];
        float acc = 0.0f;
        for (size_t i = 0; i < t.weights.size(); ++i) {
          int sx = std::clamp(t.start + static_cast<int>(i), 0, img.width - 1);
          acc += t.weights[i] * row[sx];
        }
        tmp[static_cast<size_t>(y) * out_w + x] = acc;
      }
    }
    // vertical pass
    for (int y = 0; y < out_h; ++y) {
      const auto& t = vtaps[y];
      for (int x = 0; x < out_w; ++x) {
        float acc = 0.0f;
        for (size_t i = 0; i < t.weights.size(); ++i) {
          int sy = std::clamp(t.start + static_cast<int>(i), 0, img.height - 1);
          acc += t.weights[i] * tmp[static_cast<size_t>(sy) * out_w + x];
        }
        out.planes[c][static_cast<size_t>(y) * out_w + x] = detail::quantize_sample(acc, img.depth);
      }
    }
  }
  return out;
}

inline Image resample(const Image& img, double scale, ResampleKernel kernel) {
  if (scale <= 0) fail(ErrorKind::kDimension, "resample: scale must be positive");
  int out_w = std::max(1, static_cast<int>(std::lround(img.width * scale)));
  int out_h = std::max(1, static_cast<int>(std::lround(img.height * scale)));
  return resample_to(img, out_w, out_h, kernel);
}

}  // namespace licomp
