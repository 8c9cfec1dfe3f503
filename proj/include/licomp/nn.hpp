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

#include "licomp/autodiff.hpp"

namespace licomp {

namespace detail {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatRM<T>>;

// Lowers one sample to a [C*kh*kw, OH*OW] patch matrix (zero padding,
// cross-correlation convention).
template <typename T>
void im2col(const T* src, int c_in, int h, int w, int kh, int kw, int stride, int pad,
            int oh, int ow, T* cols) {
  for (int ci = 0; ci < c_in; ++ci) {
    const T* plane = src + static_cast<int64_t>(ci) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        T* row = cols + static_cast<int64_t>((ci * kh + ky) * kw + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            std::fill(row + oy * ow, row + (oy + 1) * ow, T(0));
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride - pad + kx;
            row[oy * ow + ox] = (ix >= 0 && ix < w) ? plane[iy * w + ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds the patch matrix back onto the image grid.
template <typename T>
void col2im_add(const T* cols, int c_in, int h, int w, int kh, int kw, int stride, int pad,
                int oh, int ow, T* dst) {
  for (int ci = 0; ci < c_in; ++ci) {
    T* plane = dst + static_cast<int64_t>(ci) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const T* row = cols + static_cast<int64_t>((ci * kh + ky) * kw + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) plane[iy * w + ix] += row[oy * ow + ox];
          }
        }
      }
    }
  }
}

inline void check_4d(const Shape& s, const char* what) {
  if (s.size() != 4) fail(ErrorKind::kDimension, std::string(what) + " must be 4-d (NCHW)");
}

}  // namespace detail

// 2-d convolution, cross-correlation convention, zero padding.
//   input  [N, Cin, H, W], weight [Cout, Cin, kh, kw], bias [Cout]
//   output [N, Cout, (H+2p-kh)/s+1, (W+2p-kw)/s+1]
template <typename T>
NodePtr<T> conv2d(const NodePtr<T>& input, const NodePtr<T>& weight, const NodePtr<T>& bias,
                  int stride, int pad) {
  detail::check_4d(input->value.shape, "conv2d input");
  detail::check_4d(weight->value.shape, "conv2d weight");
  const int n = input->value.dim(0), c_in = input->value.dim(1);
  const int h = input->value.dim(2), w = input->value.dim(3);
  const int c_out = weight->value.dim(0), kh = weight->value.dim(2), kw = weight->value.dim(3);
  if (stride < 1) fail(ErrorKind::kDimension, "conv2d: stride must be positive");
  if (pad < 0) fail(ErrorKind::kDimension, "conv2d: pad must be non-negative");
  if (weight->value.dim(1) != c_in)
    fail(ErrorKind::kDimension, "conv2d: channel axis mismatch, input Cin=" +
                                    std::to_string(c_in) + " weight Cin=" +
                                    std::to_string(weight->value.dim(1)));
  if (h + 2 * pad < kh)
    fail(ErrorKind::kDimension, "conv2d: height axis too small, H+2*pad=" +
                                    std::to_string(h + 2 * pad) + " < kh=" + std::to_string(kh));
  if (w + 2 * pad < kw)
    fail(ErrorKind::kDimension, "conv2d: width axis too small, W+2*pad=" +
                                    std::to_string(w + 2 * pad) + " < kw=" + std::to_string(kw));
  if (bias->value.numel() != c_out)
    fail(ErrorKind::kDimension, "conv2d: bias axis must have Cout elements");

  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  const int k = c_in * kh * kw, p = oh * ow;

  Tensor<T> out({n, c_out, oh, ow});
  std::vector<T> cols(static_cast<size_t>(k) * p);
  detail::CMapM<T> wm(weight->value.data.data(), c_out, k);
  for (int i = 0; i < n; ++i) {
    detail::im2col(input->value.data.data() + static_cast<int64_t>(i) * c_in * h * w, c_in, h,
                   w, kh, kw, stride, pad, oh, ow, cols.data());
    detail::CMapM<T> cm(cols.data(), k, p);
    detail::MapM<T> om(out.data.data() + static_cast<int64_t>(i) * c_out * p, c_out, p);
    om.noalias() = wm * cm;
    for (int co = 0; co < c_out; ++co) om.row(co).array() += bias->value.data[co];
  }

  auto bp = [stride, pad, n, c_in, h, w, c_out, kh, kw, oh, ow, k, p](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Node<T>& wt = *self.parents[1];
    Node<T>& bs = *self.parents[2];
    in.ensure_grad();
    wt.ensure_grad();
    bs.ensure_grad();
    std::vector<T> cols(static_cast<size_t>(k) * p);
    std::vector<T> dcols(static_cast<size_t>(k) * p);
    detail::CMapM<T> wm(wt.value.data.data(), c_out, k);
    detail::MapM<T> dwm(wt.grad.data.data(), c_out, k);
    for (int i = 0; i < n; ++i) {
      detail::CMapM<T> gm(self.grad.data.data() + static_cast<int64_t>(i) * c_out * p, c_out, p);
      // bias: sum over spatial positions (plain loop keeps summation order
      // independent of heap alignment)
      for (int co = 0; co < c_out; ++co) {
        const T* row = self.grad.data.data() + (static_cast<int64_t>(i) * c_out + co) * p;
        T s = 0;
        for (int j = 0; j < p; ++j) s += row[j];
        bs.grad.data[co] += s;
      }
      detail::im2col(in.value.data.data() + static_cast<int64_t>(i) * c_in * h * w, c_in, h, w,
                     kh, kw, stride, pad, oh, ow, cols.data());
      detail::CMapM<T> cm(cols.data(), k, p);
      dwm.noalias() += gm * cm.transpose();
      detail::MapM<T> dcm(dcols.data(), k, p);
      dcm.noalias() = wm.transpose() * gm;
      detail::col2im_add(dcols.data(), c_in, h, w, kh, kw, stride, pad, oh, ow,
                         in.grad.data.data() + static_cast<int64_t>(i) * c_in * h * w);
    }
  };
  return detail::make_op<T>(std::move(out), {input, weight, bias}, std::move(bp));
}

// Transposed convolution (scatter semantics): the output equals the
// input-gradient of the matching conv2d.
//   input  [N, Cin, H, W], weight [Cin, Cout, kh, kw], bias [Cout]
//   output [N, Cout, (H-1)*s - 2p + kh, (W-1)*s - 2p + kw]
template <typename T>
NodePtr<T> conv2d_transpose(const NodePtr<T>& input, const NodePtr<T>& weight,
                            const NodePtr<T>& bias, int stride, int pad) {
  detail::check_4d(input->value.shape, "conv2d_transpose input");
  detail::check_4d(weight->value.shape, "conv2d_transpose weight");
  const int n = input->value.dim(0), c_in = input->value.dim(1);
  const int h = input->value.dim(2), w = input->value.dim(3);
  const int c_out = weight->value.dim(1), kh = weight->value.dim(2), kw = weight->value.dim(3);
  if (stride < 1) fail(ErrorKind::kDimension, "conv2d_transpose: stride must be positive");
  if (weight->value.dim(0) != c_in)
    fail(ErrorKind::kDimension, "conv2d_transpose: channel axis mismatch, input Cin=" +
                                    std::to_string(c_in) + " weight Cin=" +
                                    std::to_string(weight->value.dim(0)));
  if (bias->value.numel() != c_out)
    fail(ErrorKind::kDimension, "conv2d_transpose: bias axis must have Cout elements");
  const int oh = (h - 1) * stride - 2 * pad + kh;
  const int ow = (w - 1) * stride - 2 * pad + kw;
  if (oh < 1 || ow < 1)
    fail(ErrorKind::kDimension, "conv2d_transpose: output spatial axis would be empty");

  const int kt = c_out * kh * kw, pin = h * w;

  Tensor<T> out({n, c_out, oh, ow});
  std::vector<T> cols(static_cast<size_t>(kt) * pin);
  detail::CMapM<T> wm(weight->value.data.data(), c_in, kt);
  for (int i = 0; i < n; ++i) {
    detail::CMapM<T> im(input->value.data.data() + static_cast<int64_t>(i) * c_in * pin, c_in,
                        pin);
    detail::MapM<T> cm(cols.data(), kt, pin);
    cm.noalias() = wm.transpose() * im;
    T* dst = out.data.data() + static_cast<int64_t>(i) * c_out * oh * ow;
    detail::col2im_add(cols.data(), c_out, oh, ow, kh, kw, stride, pad, h, w, dst);
    for (int co = 0; co < c_out; ++co) {
      T b = bias->value.data[co];
      T* plane = dst + static_cast<int64_t>(co) * oh * ow;
      for (int j = 0; j < oh * ow; ++j) plane[j] += b;
    }
  }

  auto bp = [stride, pad, n, c_in, h, w, c_out, kh, kw, oh, ow, kt, pin](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Node<T>& wt = *self.parents[1];
    Node<T>& bs = *self.parents[2];
    in.ensure_grad();
    wt.ensure_grad();
    bs.ensure_grad();
    std::vector<T> gcols(static_cast<size_t>(kt) * pin);
    detail::CMapM<T> wm(wt.value.data.data(), c_in, kt);
    detail::MapM<T> dwm(wt.grad.data.data(), c_in, kt);
    for (int i = 0; i < n; ++i) {
      const T* gptr = self.grad.data.data() + static_cast<int64_t>(i) * c_out * oh * ow;
      for (int co = 0; co < c_out; ++co) {
        const T* plane = gptr + static_cast<int64_t>(co) * oh * ow;
        T s = 0;
        for (int j = 0; j < oh * ow; ++j) s += plane[j];
        bs.grad.data[co] += s;
      }
      // gcols = im2col(grad_out); dIn = W * gcols; dW += in * gcols^T
      detail::im2col(gptr, c_out, oh, ow, kh, kw, stride, pad, h, w, gcols.data());
      detail::CMapM<T> gcm(gcols.data(), kt, pin);
      detail::CMapM<T> im(in.value.data.data() + static_cast<int64_t>(i) * c_in * pin, c_in,
                          pin);
      detail::MapM<T> dim(in.grad.data.data() + static_cast<int64_t>(i) * c_in * pin, c_in,
                          pin);
      dim.noalias() += wm * gcm;
      dwm.noalias() += im * gcm.transpose();
    }
  };
  return detail::make_op<T>(std::move(out), {input, weight, bias}, std::move(bp));
}

// Fully connected layer: input [N, K], weight [M, K], bias [M] -> [N, M].
template <typename T>
NodePtr<T> linear(const NodePtr<T>& input, const NodePtr<T>& weight, const NodePtr<T>& bias) {
  if (input->value.rank() != 2 || weight->value.rank() != 2)
    fail(ErrorKind::kDimension, "linear: expects 2-d input and weight");
  const int n = input->value.dim(0), k = input->value.dim(1), m = weight->value.dim(0);
  if (weight->value.dim(1) != k)
    fail(ErrorKind::kDimension, "linear: feature axis mismatch, input K=" + std::to_string(k) +
                                    " weight K=" + std::to_string(weight->value.dim(1)));
  if (bias->value.numel() != m) fail(ErrorKind::kDimension, "linear: bias must have M elements");

  Tensor<T> out({n, m});
  detail::CMapM<T> xm(input->value.data.data(), n, k);
  detail::CMapM<T> wm(weight->value.data.data(), m, k);
  detail::MapM<T> om(out.data.data(), n, m);
  om.noalias() = xm * wm.transpose();
  for (int j = 0; j < m; ++j) om.col(j).array() += bias->value.data[j];

  auto bp = [n, k, m](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Node<T>& wt = *self.parents[1];
    Node<T>& bs = *self.parents[2];
    in.ensure_grad();
    wt.ensure_grad();
    bs.ensure_grad();
    detail::CMapM<T> gm(self.grad.data.data(), n, m);
    detail::CMapM<T> xm(in.value.data.data(), n, k);
    detail::CMapM<T> wm(wt.value.data.data(), m, k);
    detail::MapM<T> dxm(in.grad.data.data(), n, k);
    detail::MapM<T> dwm(wt.grad.data.data(), m, k);
    dxm.noalias() += gm * wm;
    dwm.noalias() += gm.transpose() * xm;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) bs.grad.data[j] += self.grad.data[static_cast<size_t>(i) * m + j];
  };
  return detail::make_op<T>(std::move(out), {input, weight, bias}, std::move(bp));
}

// PReLU with one learnable slope per channel; input NCHW, slope [C].
template <typename T>
NodePtr<T> prelu(const NodePtr<T>& x, const NodePtr<T>& slope) {
  detail::check_4d(x->value.shape, "prelu input");
  const int c = x->value.dim(1);
  if (slope->value.numel() != c)
    fail(ErrorKind::kDimension, "prelu: slope must have one entry per channel");
  const int64_t plane = static_cast<int64_t>(x->value.dim(2)) * x->value.dim(3);
  const int n = x->value.dim(0);

  Tensor<T> out = x->value;
  for (int i = 0; i < n; ++i)
    for (int ci = 0; ci < c; ++ci) {
      T a = slope->value.data[ci];
      T* p = out.data.data() + (static_cast<int64_t>(i) * c + ci) * plane;
      for (int64_t j = 0; j < plane; ++j)
        if (p[j] < T(0)) p[j] *= a;
    }

  auto bp = [n, c, plane](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    Node<T>& s = *self.parents[1];
    x.ensure_grad();
    s.ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int ci = 0; ci < c; ++ci) {
        T a = s.value.data[ci];
        int64_t base = (static_cast<int64_t>(i) * c + ci) * plane;
        for (int64_t j = 0; j < plane; ++j) {
          T xv = x.value.data[base + j];
          T g = self.grad.data[base + j];
          if (xv >= T(0)) {
            x.grad.data[base + j] += g;
          } else {
            x.grad.data[base + j] += a * g;
            s.grad.data[ci] += xv * g;
          }
        }
      }
  };
  return detail::make_op<T>(std::move(out), {x, slope}, std::move(bp));
}

template <typename T>
NodePtr<T> leaky_relu(const NodePtr<T>& x, T alpha) {
  Tensor<T> out = x->value;
  for (auto& v : out.data)
    if (v < T(0)) v *= alpha;
  return detail::make_op<T>(std::move(out), {x}, [alpha](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    x.ensure_grad();
    for (size_t i = 0; i < x.grad.data.size(); ++i)
      x.grad.data[i] += self.grad.data[i] * (x.value.data[i] >= T(0) ? T(1) : alpha);
  });
}

template <typename T>
NodePtr<T> relu(const NodePtr<T>& x) {
  return leaky_relu(x, T(0));
}

template <typename T>
NodePtr<T> tanh_op(const NodePtr<T>& x) {
  Tensor<T> out = x->value;
  for (auto& v : out.data) v = std::tanh(v);
  return detail::make_op<T>(std::move(out), {x}, [](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    x.ensure_grad();
    for (size_t i = 0; i < x.grad.data.size(); ++i) {
      T y = self.value.data[i];
      x.grad.data[i] += self.grad.data[i] * (T(1) - y * y);
    }
  });
}

template <typename T>
NodePtr<T> sigmoid(const NodePtr<T>& x) {
  Tensor<T> out = x->value;
  for (auto& v : out.data) v = T(1) / (T(1) + std::exp(-v));
  return detail::make_op<T>(std::move(out), {x}, [](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    x.ensure_grad();
    for (size_t i = 0; i < x.grad.data.size(); ++i) {
      T y = self.value.data[i];
      x.grad.data[i] += self.grad.data[i] * y * (T(1) - y);
    }
  });
}

// Running statistics owned by the layer, updated on train-mode forwards.
template <typename T>
struct BatchNormStats {
  Tensor<T> mean;
  Tensor<T> var;
  explicit BatchNormStats(int channels)
      : mean(Tensor<T>::zeros({channels})), var(Tensor<T>::full({channels}, T(1))) {}
  BatchNormStats() = default;
};

enum class BnMode { kTrain, kInfer };

template <typename T>
NodePtr<T> batch_norm(const NodePtr<T>& x, const NodePtr<T>& gamma, const NodePtr<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var, BnMode mode,
                      T eps = T(1e-5), T momentum = T(0.9)) {
  detail::check_4d(x->value.shape, "batch_norm input");
  const int n = x->value.dim(0), c = x->value.dim(1);
  const int64_t plane = static_cast<int64_t>(x->value.dim(2)) * x->value.dim(3);
  const int64_t m = static_cast<int64_t>(n) * plane;  // samples per channel
  if (gamma->value.numel() != c || beta->value.numel() != c)
    fail(ErrorKind::kDimension, "batch_norm: gamma/beta must have C elements");
  if (n == 0) fail(ErrorKind::kDimension, "batch_norm: zero batch");
  if (mode == BnMode::kTrain && m < 2)
    fail(ErrorKind::kDimension, "batch_norm: train mode needs at least 2 samples per channel");

  Tensor<T> mean({c}), inv_std({c});
  if (mode == BnMode::kTrain) {
    for (int ci = 0; ci < c; ++ci) {
      T mu = 0;
      for (int i = 0; i < n; ++i) {
        const T* p = x->value.data.data() + (static_cast<int64_t>(i) * c + ci) * plane;
        for (int64_t j = 0; j < plane; ++j) mu += p[j];
      }
      mu /= static_cast<T>(m);
      T var = 0;
      for (int i = 0; i < n; ++i) {
        const T* p = x->value.data.data() + (static_cast<int64_t>(i) * c + ci) * plane;
        for (int64_t j = 0; j < plane; ++j) {
          T d = p[j] - mu;
          var += d * d;
        }
      }
      var /= static_cast<T>(m);
      mean.data[ci] = mu;
      inv_std.data[ci] = T(1) / std::sqrt(var + eps);
      running_mean.data[ci] = momentum * running_mean.data[ci] + (T(1) - momentum) * mu;
      running_var.data[ci] = momentum * running_var.data[ci] + (T(1) - momentum) * var;
    }
  } else {
    for (int ci = 0; ci < c; ++ci) {
      mean.data[ci] = running_mean.data[ci];
      inv_std.data[ci] = T(1) / std::sqrt(running_var.data[ci] + eps);
    }
  }

  Tensor<T> xhat(x->value.shape);
  Tensor<T> out(x->value.shape);
  for (int i = 0; i < n; ++i)
    for (int ci = 0; ci < c; ++ci) {
      int64_t base = (static_cast<int64_t>(i) * c + ci) * plane;
      T mu = mean.data[ci], is = inv_std.data[ci];
      T g = gamma->value.data[ci], b = beta->value.data[ci];
      for (int64_t j = 0; j < plane; ++j) {
        T xh = (x->value.data[base + j] - mu) * is;
        xhat.data[base + j] = xh;
        out.data[base + j] = g * xh + b;
      }
    }

  bool train = mode == BnMode::kTrain;
  auto bp = [n, c, plane, m, train, xhat = std::move(xhat),
             inv_std = std::move(inv_std)](Node<T>& self) {
    Node<T>& x = *self.parents[0];
    Node<T>& ga = *self.parents[1];
    Node<T>& be = *self.parents[2];
    x.ensure_grad();
    ga.ensure_grad();
    be.ensure_grad();
    for (int ci = 0; ci < c; ++ci) {
      T sum_dy = 0, sum_dy_xh = 0;
      for (int i = 0; i < n; ++i) {
        int64_t base = (static_cast<int64_t>(i) * c + ci) * plane;
        for (int64_t j = 0; j < plane; ++j) {
          sum_dy += self.grad.data[base + j];
          sum_dy_xh += self.grad.data[base + j] * xhat.data[base + j];
        }
      }
      be.grad.data[ci] += sum_dy;
      ga.grad.data[ci] += sum_dy_xh;
      T g = ga.value.data[ci], is = inv_std.data[ci];
      if (train) {
        T inv_m = T(1) / static_cast<T>(m);
        for (int i = 0; i < n; ++i) {
          int64_t base = (static_cast<int64_t>(i) * c + ci) * plane;
          for (int64_t j = 0; j < plane; ++j) {
            T dy = self.grad.data[base + j];
            x.grad.data[base + j] +=
                g * is * (dy - inv_m * sum_dy - xhat.data[base + j] * inv_m * sum_dy_xh);
          }
        }
      } else {
        for (int i = 0; i < n; ++i) {
          int64_t base = (static_cast<int64_t>(i) * c + ci) * plane;
          for (int64_t j = 0; j < plane; ++j)
            x.grad.data[base + j] += g * is * self.grad.data[base + j];
        }
      }
    }
  };
  return detail::make_op<T>(std::move(out), {x, gamma, beta}, std::move(bp));
}

template <typename T>
NodePtr<T> batch_norm(const NodePtr<T>& x, const NodePtr<T>& gamma, const NodePtr<T>& beta,
                      BatchNormStats<T>& stats, BnMode mode, T eps = T(1e-5),
                      T momentum = T(0.9)) {
  return batch_norm(x, gamma, beta, stats.mean, stats.var, mode, eps, momentum);
}

// DCGAN discriminator loss: -mean log d_real - mean log(1 - d_fake).
// Probabilities are clamped to [1e-7, 1-1e-7]; the clamp kills the gradient.
template <typename T>
NodePtr<T> bce_d_loss(const NodePtr<T>& d_real, const NodePtr<T>& d_fake) {
  const T lo = T(1e-7), hi = T(1) - T(1e-7);
  auto clamp = [&](T v) { return std::min(hi, std::max(lo, v)); };
  T loss = 0;
  for (T v : d_real->value.data) loss -= std::log(clamp(v));
  loss /= static_cast<T>(d_real->value.numel());
  T lf = 0;
  for (T v : d_fake->value.data) lf -= std::log(T(1) - clamp(v));
  loss += lf / static_cast<T>(d_fake->value.numel());

  auto bp = [lo, hi](Node<T>& self) {
    Node<T>& r = *self.parents[0];
    Node<T>& f = *self.parents[1];
    r.ensure_grad();
    f.ensure_grad();
    T g = self.grad.data[0];
    T inv_nr = T(1) / static_cast<T>(r.value.numel());
    T inv_nf = T(1) / static_cast<T>(f.value.numel());
    for (size_t i = 0; i < r.value.data.size(); ++i) {
      T v = r.value.data[i];
      if (v > lo && v < hi) r.grad.data[i] += g * (-inv_nr / v);
    }
    for (size_t i = 0; i < f.value.data.size(); ++i) {
      T v = f.value.data[i];
      if (v > lo && v < hi) f.grad.data[i] += g * (inv_nf / (T(1) - v));
    }
  };
  return detail::make_op<T>(Tensor<T>::scalar(loss), {d_real, d_fake}, std::move(bp));
}

}  // namespace licomp
