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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "licomp/common.hpp"

namespace licomp {

struct RdPoint {
  double bpp = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
  std::string codec;
  std::string note;
};

struct RdCurve {
  std::string label;
  std::vector<RdPoint> points;  // sorted ascending by bpp

  void sort_and_check() {
    std::sort(points.begin(), points.end(),
              [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
    for (size_t i = 1; i < points.size(); ++i)
      if (!(points[i].bpp > points[i - 1].bpp))
        fail(ErrorKind::kNumeric, "rd curve " + label + ": bpp values must strictly increase");
    for (const auto& p : points)
      if (!(p.bpp > 0.0)) fail(ErrorKind::kNumeric, "rd curve " + label + ": bpp must be > 0");
  }
};

enum class QualityAxis { kPsnr, kMsSsimDb };

namespace detail {

inline double quality_of(const RdPoint& p, QualityAxis axis) {
  if (axis == QualityAxis::kPsnr) return p.psnr;
  // MS-SSIM in dB: -10 log10(1 - v)
  double v = std::min(p.ms_ssim, 1.0 - 1e-12);
  return -10.0 * std::log10(1.0 - v);
}

// Least-squares cubic fit of log10(rate) against quality, centered for
// conditioning. Returns coefficients c0..c3 in the centered variable.
inline Eigen::Vector4d fit_log_rate(const std::vector<double>& quality,
                                    const std::vector<double>& log_rate, double center) {
  Eigen::MatrixXd vand(quality.size(), 4);
  Eigen::VectorXd rhs(quality.size());
  for (size_t i = 0; i < quality.size(); ++i) {
    double q = quality[i] - center;
    vand(i, 0) = 1.0;
    vand(i, 1) = q;
    vand(i, 2) = q * q;
    vand(i, 3) = q * q * q;
    rhs(i) = log_rate[i];
  }
  return vand.colPivHouseholderQr().solve(rhs);
}

inline double integrate_cubic(const Eigen::Vector4d& c, double lo, double hi) {
  auto anti = [&](double q) {
    return c[0] * q + c[1] * q * q / 2.0 + c[2] * q * q * q / 3.0 + c[3] * q * q * q * q / 4.0;
  };
  return anti(hi) - anti(lo);
}

}  // namespace detail

// Bjontegaard delta rate: average rate difference (percent) between the test
// and anchor curves over their overlapping quality interval, via cubic
// polynomial fits of log10(rate) against quality. Negative means the test
// codec spends less rate at equal quality.
inline double bd_rate(const RdCurve& anchor, const RdCurve& test,
                      QualityAxis axis = QualityAxis::kPsnr) {
  if (anchor.points.size() < 4 || test.points.size() < 4)
    fail(ErrorKind::kDimension, "bd_rate: both curves need at least 4 points");

  auto extract = [&](const RdCurve& c, std::vector<double>& q, std::vector<double>& r) {
    for (const auto& p : c.points) {
      if (!(p.bpp > 0.0)) fail(ErrorKind::kNumeric, "bd_rate: bpp must be positive");
      q.push_back(detail::quality_of(p, axis));
      r.push_back(std::log10(p.bpp));
    }
  };
  std::vector<double> qa, ra, qt, rt;
  extract(anchor, qa, ra);
  extract(test, qt, rt);

  double lo = std::max(*std::min_element(qa.begin(), qa.end()),
                       *std::min_element(qt.begin(), qt.end()));
  double hi = std::min(*std::max_element(qa.begin(), qa.end()),
                       *std::max_element(qt.begin(), qt.end()));
  if (!(hi > lo)) fail(ErrorKind::kNumeric, "bd_rate: curves share no quality overlap");

  double center = (lo + hi) / 2.0;
  auto ca = detail::fit_log_rate(qa, ra, center);
  auto ct = detail::fit_log_rate(qt, rt, center);
  double avg_diff = (detail::integrate_cubic(ct, lo - center, hi - center) -
                     detail::integrate_cubic(ca, lo - center, hi - center)) /
                    (hi - lo);
  return (std::pow(10.0, avg_diff) - 1.0) * 100.0;
}

}  // namespace licomp
