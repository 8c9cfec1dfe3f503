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
#include <cmath>
#include <vector>

#include "licomp/feature.hpp"

namespace licomp {

// Orthogonal channel rotation: rows of `basis` are eigenvectors of the sample
// covariance, ordered by descending eigenvalue. Sign convention: the
// largest-magnitude component of each row is positive, which makes the fit
// deterministic.
struct PcaBasis {
  int dim = 0;
  std::vector<float> mean;         // C
  std::vector<float> basis;        // C x C, row-major
  std::vector<float> eigenvalues;  // non-increasing, >= 0

  float row(int r, int c) const { return basis[static_cast<size_t>(r) * dim + c]; }
};

enum class PcaDirection { kForward, kInverse };

// Eigendecomposition of the (population) covariance of `count` samples of
// dimension `dim`, laid out sample-major. Rank-deficient covariances are
// fine: trailing eigenvalues come out zero and the basis stays orthogonal.
inline PcaBasis pca_fit(const float* samples, size_t count, int dim) {
  if (count <= static_cast<size_t>(dim))
    fail(ErrorKind::kDimension, "pca_fit: need more than dim=" + std::to_string(dim) +
                                    " samples, got " + std::to_string(count));
  for (size_t i = 0; i < count * dim; ++i)
    if (!std::isfinite(samples[i])) fail(ErrorKind::kNumeric, "pca_fit: non-finite sample");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (size_t i = 0; i < count; ++i)
    for (int c = 0; c < dim; ++c) mean[c] += samples[i * dim + c];
  mean /= static_cast<double>(count);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (size_t i = 0; i < count; ++i) {
    Eigen::VectorXd x(dim);
    for (int c = 0; c < dim; ++c) x[c] = samples[i * dim + c] - mean[c];
    cov.noalias() += x * x.transpose();
  }
  cov /= static_cast<double>(count);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::kNumeric, "pca_fit: eigendecomposition failed");

  PcaBasis out;
  out.dim = dim;
  out.mean.resize(dim);
  out.basis.resize(static_cast<size_t>(dim) * dim);
  out.eigenvalues.resize(dim);
  for (int c = 0; c < dim; ++c) out.mean[c] = static_cast<float>(mean[c]);

  // Eigen returns ascending eigenvalues; emit rows in descending order.
  for (int r = 0; r < dim; ++r) {
    int src = dim - 1 - r;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    int peak = 0;
    for (int c = 1; c < dim; ++c)
      if (std::abs(v[c]) > std::abs(v[peak])) peak = c;
    if (v[peak] < 0) v = -v;
    for (int c = 0; c < dim; ++c)
      out.basis[static_cast<size_t>(r) * dim + c] = static_cast<float>(v[c]);
    out.eigenvalues[r] = static_cast<float>(std::max(0.0, solver.eigenvalues()[src]));
  }
  return out;
}

inline PcaBasis pca_fit(const std::vector<float>& samples, int dim) {
  return pca_fit(samples.data(), samples.size() / dim, dim);
}

// Fits across the channel dimension: every spatial location contributes one
// C-vector.
inline PcaBasis pca_fit(const FeatureBlock& fb) {
  size_t count = fb.plane_size();
  std::vector<float> samples(count * fb.channels);
  for (size_t i = 0; i < count; ++i)
    for (int c = 0; c < fb.channels; ++c) samples[i * fb.channels + c] = fb.plane(c)[i];
  return pca_fit(samples.data(), count, fb.channels);
}

// Rotates every spatial location's channel vector. Forward output channel 0
// carries the largest-variance component; inverse undoes forward exactly (up
// to float round-off).
inline FeatureBlock pca_apply(const FeatureBlock& fb, const PcaBasis& basis,
                              PcaDirection direction) {
  if (fb.channels != basis.dim)
    fail(ErrorKind::kDimension, "pca_apply: block has " + std::to_string(fb.channels) +
                                    " channels, basis dim is " + std::to_string(basis.dim));
  const int c_n = fb.channels;
  FeatureBlock out = FeatureBlock::make(c_n, fb.h, fb.w);
  std::vector<float> v(c_n);
  for (size_t i = 0; i < fb.plane_size(); ++i) {
    for (int c = 0; c < c_n; ++c) v[c] = fb.plane(c)[i];
    if (direction == PcaDirection::kForward) {
      for (int r = 0; r < c_n; ++r) {
        float acc = 0.0f;
        for (int c = 0; c < c_n; ++c) acc += basis.row(r, c) * (v[c] - basis.mean[c]);
        out.plane(r)[i] = acc;
      }
    } else {
      for (int c = 0; c < c_n; ++c) {
        float acc = basis.mean[c];
        for (int r = 0; r < c_n; ++r) acc += basis.row(r, c) * v[r];
        out.plane(c)[i] = acc;
      }
    }
  }
  return out;
}

}  // namespace licomp
