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

#include "licomp/image.hpp"
#include "licomp/layers.hpp"

namespace licomp {

// Three-layer super-resolution network (kernels 9/1/5, filters 64/32/1,
// single channel). Spatial dims are preserved by replicate padding, applied
// once up front (4 + 2 pixels worth) since the convolutions themselves are
// zero-padding only.
template <typename T>
struct SrcnnModel {
  Conv2dLayer<T> conv1, conv2, conv3;

  static SrcnnModel make(uint64_t seed) {
    SrcnnModel m;
    std::mt19937_64 rng(seed);
    m.conv1 = Conv2dLayer<T>::make("srcnn.conv1", 1, 64, 9, 1, 0, rng);
    m.conv2 = Conv2dLayer<T>::make("srcnn.conv2", 64, 32, 1, 1, 0, rng);
    m.conv3 = Conv2dLayer<T>::make("srcnn.conv3", 32, 1, 5, 1, 0, rng);
    return m;
  }

  // Center-spike kernels along channel 0: the network is the identity map on
  // unit-range inputs.
  static SrcnnModel identity() {
    SrcnnModel m = make(0);
    for (auto* p : {&m.conv1.w, &m.conv2.w, &m.conv3.w})
      std::fill(p->value().data.begin(), p->value().data.end(), T(0));
    m.conv1.w.value().at(0, 0, 4, 4) = T(1);
    m.conv2.w.value().at(0, 0, 0, 0) = T(1);
    m.conv3.w.value().at(0, 0, 2, 2) = T(1);
    return m;
  }

  // Identity plus a little noise: every filter participates from step one,
  // which keeps the tiny desk-scale training runs short.
  static SrcnnModel near_identity(uint64_t seed, T noise = T(0.02)) {
    SrcnnModel m = identity();
    std::mt19937_64 rng(seed);
    for (auto* p : {&m.conv1.w, &m.conv2.w, &m.conv3.w})
      for (auto& v : p->value().data) {
        std::uniform_real_distribution<double> dist(-static_cast<double>(noise),
                                                    static_cast<double>(noise));
        v += static_cast<T>(dist(rng));
      }
    return m;
  }

  NodePtr<T> forward(const NodePtr<T>& padded) const {
    auto h = relu(conv1(padded));
    h = relu(conv2(h));
    return conv3(h);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    conv1.collect(out);
    conv2.collect(out);
    conv3.collect(out);
    return out;
  }
};

namespace detail {

inline constexpr int kSrcnnPad = 6;  // 4 (9x9) + 2 (5x5)

template <typename T>
Tensor<T> replicate_pad(const Tensor<T>& x, int pad) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> out({n, c, h + 2 * pad, w + 2 * pad});
  for (int i = 0; i < n; ++i)
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < h + 2 * pad; ++y)
        for (int xx = 0; xx < w + 2 * pad; ++xx)
          out.at(i, ci, y, xx) =
              x.at(i, ci, std::clamp(y - pad, 0, h - 1), std::clamp(xx - pad, 0, w - 1));
  return out;
}

}  // namespace detail

template <typename T>
NodePtr<T> srcnn_apply(const SrcnnModel<T>& model, const Tensor<T>& batch) {
  return model.forward(constant(detail::replicate_pad(batch, detail::kSrcnnPad)));
}

// Enhancement pass over a single-channel unit-range image (typically the Y
// plane of a bicubic-upsampled decode); dims are preserved, output clamped.
template <typename T>
Image srcnn_forward(const Image& img, const SrcnnModel<T>& model) {
  if (img.channels() != 1)
    fail(ErrorKind::kDimension, "srcnn_forward: expects a single-channel image");
  if (img.depth != Depth::kF32)
    fail(ErrorKind::kDimension, "srcnn_forward: expects a unit-range float image");
  Tensor<T> x({1, 1, img.height, img.width});
  for (size_t i = 0; i < x.data.size(); ++i) x.data[i] = static_cast<T>(img.planes[0][i]);
  auto y = srcnn_apply(model, x);
  if (y->value.dim(2) != img.height || y->value.dim(3) != img.width)
    fail(ErrorKind::kNumeric, "srcnn_forward: padding arithmetic broke dimension preservation");
  Image out = Image::make(img.width, img.height, 1, Colorspace::kGray, Depth::kF32);
  for (size_t i = 0; i < out.planes[0].size(); ++i)
    out.planes[0][i] = std::min(1.0f, std::max(0.0f, static_cast<float>(y->value.data[i])));
  return out;
}

// MSE training step on paired (bicubic-upsampled low-res, target) batches.
template <typename T>
T srcnn_train_step(SrcnnModel<T>& model, const Tensor<T>& input, const Tensor<T>& target,
                   AdamOptimizer<T>& opt) {
  if (input.shape != target.shape)
    fail(ErrorKind::kDimension, "srcnn_train_step: input/target shape mismatch");
  auto out = srcnn_apply(model, input);
  auto loss = mse(out, constant(target));
  T value = loss->value.data[0];
  if (!std::isfinite(static_cast<double>(value)))
    fail(ErrorKind::kNumeric, "srcnn_train_step: non-finite loss");
  backward(loss);
  opt.step();
  return value;
}

}  // namespace licomp
