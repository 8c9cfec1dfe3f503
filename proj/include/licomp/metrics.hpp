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
#include <limits>
#include <vector>

#include "licomp/image.hpp"

namespace licomp {

// Identical images report this distinguished lossless value.
inline constexpr double kLosslessPsnr = std::numeric_limits<double>::infinity();

namespace detail {

inline void check_comparable(const Image& a, const Image& b, const char* what) {
  if (a.width != b.width || a.height != b.height)
    fail(ErrorKind::kDimension, std::string(what) + ": dimension mismatch " +
                                    std::to_string(a.width) + "x" + std::to_string(a.height) +
                                    " vs " + std::to_string(b.width) + "x" +
                                    std::to_string(b.height));
  if (a.channels() != b.channels())
    fail(ErrorKind::kDimension, std::string(what) + ": channel count mismatch");
  if (a.depth != b.depth)
    fail(ErrorKind::kDimension, std::string(what) + ": depth mismatch");
}

inline std::vector<double> luma_plane(const Image& img) {
  std::vector<double> y(img.pixel_count());
  if (img.colorspace == Colorspace::kRgb && img.channels() == 3) {
    for (size_t i = 0; i < y.size(); ++i)
      y[i] = 0.299 * img.planes[0][i] + 0.587 * img.planes[1][i] + 0.114 * img.planes[2][i];
  } else {
    for (size_t i = 0; i < y.size(); ++i) y[i] = img.planes[0][i];
  }
  return y;
}

}  // namespace detail

// 10*log10(MAX^2 / MSE) over all planes; MAX = 255 for 8-bit images.
inline double psnr(const Image& a, const Image& b) {
  detail::check_comparable(a, b, "psnr");
  double sq = 0.0;
  size_t n = 0;
  for (int c = 0; c < a.channels(); ++c)
    for (size_t i = 0; i < a.pixel_count(); ++i) {
      double d = static_cast<double>(a.planes[c][i]) - b.planes[c][i];
      sq += d * d;
      ++n;
    }
  if (sq == 0.0) return kLosslessPsnr;
  double peak = a.depth == Depth::kU8 ? 255.0 : 1.0;
  return 10.0 * std::log10(peak * peak * static_cast<double>(n) / sq);
}

namespace detail {

struct SsimScale {
  double mean_ssim;  // luminance * contrast-structure at this scale
  double mean_cs;    // contrast-structure only
};

// Single-scale SSIM statistics with an 11x11 Gaussian window (sigma 1.5),
// valid-region convention: stats only where the window fully fits.
inline SsimScale ssim_scale(const std::vector<double>& a, const std::vector<double>& b, int w,
                            int h, double peak) {
  constexpr int kWin = 11;
  static const std::vector<double> kWindow = [] {
    std::vector<double> win(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      double d = i - (kWin - 1) / 2.0;
      win[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += win[i];
    }
    for (auto& v : win) v /= sum;
    return win;
  }();

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const int ow = w - kWin + 1, oh = h - kWin + 1;
  if (ow < 1 || oh < 1) fail(ErrorKind::kDimension, "ms_ssim: image too small for the window");

  // separable filtering of the five moment images
  auto filt = [&](const std::vector<double>& src) {
    std::vector<double> hpass(static_cast<size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int i = 0; i < kWin; ++i) acc += kWindow[i] * src[y * w + x + i];
        hpass[static_cast<size_t>(y) * ow + x] = acc;
      }
    std::vector<double> out(static_cast<size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (int i = 0; i < kWin; ++i) acc += kWindow[i] * hpass[static_cast<size_t>(y + i) * ow + x];
        out[static_cast<size_t>(y) * ow + x] = acc;
      }
    return out;
  };

  std::vector<double> ab(a.size()), aa(a.size()), bb(b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    ab[i] = a[i] * b[i];
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
  }

  auto mu1 = filt(a), mu2 = filt(b);
  auto e_aa = filt(aa), e_bb = filt(bb), e_ab = filt(ab);

  double sum_ssim = 0.0, sum_cs = 0.0;
  for (size_t i = 0; i < mu1.size(); ++i) {
    double m1 = mu1[i], m2 = mu2[i];
    double s1 = e_aa[i] - m1 * m1;
    double s2 = e_bb[i] - m2 * m2;
    double s12 = e_ab[i] - m1 * m2;
    double cs = (2.0 * s12 + c2) / (s1 + s2 + c2);
    double lum = (2.0 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
    sum_cs += cs;
    sum_ssim += lum * cs;
  }
  return {sum_ssim / mu1.size(), sum_cs / mu1.size()};
}

inline void downsample2x(std::vector<double>& img, int& w, int& h) {
  int nw = w / 2, nh = h / 2;
  std::vector<double> out(static_cast<size_t>(nw) * nh);
  for (int y = 0; y < nh; ++y)
    for (int x = 0; x < nw; ++x)
      out[static_cast<size_t>(y) * nw + x] =
          0.25 * (img[static_cast<size_t>(2 * y) * w + 2 * x] +
                  img[static_cast<size_t>(2 * y) * w + 2 * x + 1] +
                  img[static_cast<size_t>(2 * y + 1) * w + 2 * x] +
                  img[static_cast<size_t>(2 * y + 1) * w + 2 * x + 1]);
  img = std::move(out);
  w = nw;
  h = nh;
}

}  // namespace detail

// Multi-scale SSIM on the luma plane, Wang et al. exponents
// (0.0448, 0.2856, 0.3001, 0.2363, 0.1333), K1 = 0.01, K2 = 0.03. Images
// whose smaller dimension cannot feed 5 dyadic scales use fewer scales with
// renormalized weights. Negative per-scale terms are clamped to 0 before the
// geometric combination.
inline double ms_ssim(const Image& a, const Image& b) {
  detail::check_comparable(a, b, "ms_ssim");
  static const double kWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

  int scales = 0;
  {
    int d = std::min(a.width, a.height);
    while (scales < 5 && d >= 11) {
      ++scales;
      d /= 2;
    }
  }
  if (scales == 0) fail(ErrorKind::kDimension, "ms_ssim: image smaller than the 11x11 window");

  if (a.planes == b.planes) return 1.0;  // self-comparison is exact by definition

  double weight_sum = 0.0;
  for (int s = 0; s < scales; ++s) weight_sum += kWeights[s];

  auto ya = detail::luma_plane(a);
  auto yb = detail::luma_plane(b);
  int w = a.width, h = a.height;
  const double peak = a.depth == Depth::kU8 ? 255.0 : 1.0;

  double result = 1.0;
  for (int s = 0; s < scales; ++s) {
    auto stats = detail::ssim_scale(ya, yb, w, h, peak);
    double expo = kWeights[s] / weight_sum;
    double term = (s == scales - 1) ? stats.mean_ssim : stats.mean_cs;
    term = std::max(term, 0.0);
    result *= std::pow(term, expo);
    if (s != scales - 1) {
      int wb = w, hb = h;
      detail::downsample2x(ya, w, h);
      detail::downsample2x(yb, wb, hb);
    }
  }
  return std::min(1.0, std::max(0.0, result));
}

}  // namespace licomp
