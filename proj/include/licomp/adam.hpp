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
#include <string>
#include <vector>

#include "licomp/autodiff.hpp"

namespace licomp {

// Named trainable tensor; the grad lives on the shared node so one Param can
// appear in several graph positions and accumulate.
template <typename T>
struct Param {
  std::string name;
  NodePtr<T> node;

  Param() = default;
  Param(std::string n, Tensor<T> value) : name(std::move(n)), node(leaf(std::move(value), true)) {}

  Tensor<T>& value() { return node->value; }
  const Tensor<T>& value() const { return node->value; }
  Tensor<T>& grad() {
    node->ensure_grad();
    return node->grad;
  }
  void zero_grad() { node->grad = Tensor<T>(); }
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  Tensor<T> m;
  Tensor<T> v;
  int64_t t = 0;
};

// One bias-corrected Adam step; clears the grad afterwards.
template <typename T>
void adam_step(Param<T>& param, AdamState<T>& state, const AdamConfig& cfg) {
  Tensor<T>& w = param.value();
  Tensor<T>& g = param.grad();
  if (!g.same_shape(w))
    fail(ErrorKind::kDimension, "adam_step: grad shape mismatch for " + param.name);
  if (!g.all_finite())
    fail(ErrorKind::kNumeric, "adam_step: non-finite gradient for " + param.name +
                                  " (training divergence)");
  if (state.m.data.empty()) {
    state.m = Tensor<T>::zeros(w.shape);
    state.v = Tensor<T>::zeros(w.shape);
  }
  if (!state.m.same_shape(w))
    fail(ErrorKind::kDimension, "adam_step: state shape mismatch for " + param.name);

  state.t += 1;
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(state.t)));
  const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(state.t)));
  const T lr = static_cast<T>(cfg.lr), eps = static_cast<T>(cfg.eps);
  for (size_t i = 0; i < w.data.size(); ++i) {
    T gi = g.data[i];
    state.m.data[i] = b1 * state.m.data[i] + (T(1) - b1) * gi;
    state.v.data[i] = b2 * state.v.data[i] + (T(1) - b2) * gi * gi;
    T mhat = state.m.data[i] / bc1;
    T vhat = state.v.data[i] / bc2;
    w.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  param.zero_grad();
}

// Convenience wrapper pairing a model's params with per-param Adam state.
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Param<T>*> params, AdamConfig cfg)
      : params_(std::move(params)), states_(params_.size()), cfg_(cfg) {}

  void step() {
    for (size_t i = 0; i < params_.size(); ++i) adam_step(*params_[i], states_[i], cfg_);
  }
  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Param<T>*> params_;
  std::vector<AdamState<T>> states_;
  AdamConfig cfg_;
};

}  // namespace licomp
