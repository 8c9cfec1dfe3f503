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

#include <string>
#include <vector>

#include "licomp/adam.hpp"
#include "licomp/nn.hpp"

namespace licomp {

// Thin layer wrappers bundling params with their hyperparameters. Weight
// init is He-uniform; PReLU slopes start at 0.25, batch-norm at gamma=1 /
// beta=0.

template <typename T>
struct Conv2dLayer {
  Param<T> w, b;
  int stride = 1, pad = 0;

  static Conv2dLayer make(const std::string& name, int cin, int cout, int k, int stride, int pad,
                          std::mt19937_64& rng) {
    Conv2dLayer l;
    l.w = Param<T>(name + ".w", he_uniform<T>({cout, cin, k, k}, cin * k * k, rng));
    l.b = Param<T>(name + ".b", Tensor<T>::zeros({cout}));
    l.stride = stride;
    l.pad = pad;
    return l;
  }
  NodePtr<T> operator()(const NodePtr<T>& x) const { return conv2d(x, w.node, b.node, stride, pad); }
  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename T>
struct ConvTranspose2dLayer {
  Param<T> w, b;
  int stride = 1, pad = 0;

  static ConvTranspose2dLayer make(const std::string& name, int cin, int cout, int k, int stride,
                                   int pad, std::mt19937_64& rng) {
    ConvTranspose2dLayer l;
    l.w = Param<T>(name + ".w", he_uniform<T>({cin, cout, k, k}, cin * k * k, rng));
    l.b = Param<T>(name + ".b", Tensor<T>::zeros({cout}));
    l.stride = stride;
    l.pad = pad;
    return l;
  }
  NodePtr<T> operator()(const NodePtr<T>& x) const {
    return conv2d_transpose(x, w.node, b.node, stride, pad);
  }
  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename T>
struct LinearLayer {
  Param<T> w, b;

  static LinearLayer make(const std::string& name, int in, int out_n, std::mt19937_64& rng) {
    LinearLayer l;
    l.w = Param<T>(name + ".w", he_uniform<T>({out_n, in}, in, rng));
    l.b = Param<T>(name + ".b", Tensor<T>::zeros({out_n}));
    return l;
  }
  NodePtr<T> operator()(const NodePtr<T>& x) const { return linear(x, w.node, b.node); }
  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

template <typename T>
struct PreluLayer {
  Param<T> a;

  static PreluLayer make(const std::string& name, int channels, T init = T(0.25)) {
    PreluLayer l;
    l.a = Param<T>(name + ".a", Tensor<T>::full({channels}, init));
    return l;
  }
  NodePtr<T> operator()(const NodePtr<T>& x) const { return prelu(x, a.node); }
  void collect(std::vector<Param<T>*>& out) { out.push_back(&a); }
};

// Running statistics ride along as non-trained params so checkpoints carry
// them; only gamma/beta go to the optimizer.
template <typename T>
struct BatchNormLayer {
  Param<T> gamma, beta;
  Param<T> rmean, rvar;

  static BatchNormLayer make(const std::string& name, int channels) {
    BatchNormLayer l;
    l.gamma = Param<T>(name + ".gamma", Tensor<T>::full({channels}, T(1)));
    l.beta = Param<T>(name + ".beta", Tensor<T>::zeros({channels}));
    l.rmean = Param<T>(name + ".rmean", Tensor<T>::zeros({channels}));
    l.rvar = Param<T>(name + ".rvar", Tensor<T>::full({channels}, T(1)));
    return l;
  }
  NodePtr<T> operator()(const NodePtr<T>& x, BnMode mode) {
    return batch_norm(x, gamma.node, beta.node, rmean.value(), rvar.value(), mode);
  }
  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
  void collect_state(std::vector<Param<T>*>& out) {
    collect(out);
    out.push_back(&rmean);
    out.push_back(&rvar);
  }
};

}  // namespace licomp
