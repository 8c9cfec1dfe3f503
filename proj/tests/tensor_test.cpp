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

#include <catch2/catch_amalgamated.hpp>

#include "licomp/adam.hpp"
#include "licomp/autodiff.hpp"
#include "licomp/checkpoint.hpp"
#include "licomp/nn.hpp"
#include "testutil.hpp"

using namespace licomp;

namespace {

template <typename T>
NodePtr<T> const_node(Tensor<T> t) {
  return constant(std::move(t));
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  REQUIRE(a.shape == b.shape);
  double worst = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
  return worst;
}

}  // namespace

TEST_CASE("conv2d all-ones 3x3 sums to 9") {
  auto x = const_node(Tensor<float>::full({1, 1, 3, 3}, 1.0f));
  auto w = const_node(Tensor<float>::full({1, 1, 3, 3}, 1.0f));
  auto b = const_node(Tensor<float>::zeros({1}));
  auto y = conv2d(x, w, b, 1, 0);
  REQUIRE(y->value.shape == Shape{1, 1, 1, 1});
  REQUIRE(y->value.data[0] == Catch::Approx(9.0f));
}

TEST_CASE("conv2d identity kernel reproduces input") {
  auto rng = testutil::rng(7);
  auto xt = uniform_tensor<float>({1, 1, 5, 6}, -1.0f, 1.0f, rng);
  Tensor<float> wt({1, 1, 3, 3});
  wt.at(0, 0, 1, 1) = 1.0f;
  auto y = conv2d(const_node(xt), const_node(wt), const_node(Tensor<float>::zeros({1})), 1, 1);
  REQUIRE(max_abs_diff(y->value, xt) == 0.0);
}

TEST_CASE("conv2d matches six-nested-loop oracle") {
  auto rng = testutil::rng(11);
  auto x = uniform_tensor<double>({1, 2, 4, 4}, -1.0, 1.0, rng);
  auto w = uniform_tensor<double>({3, 2, 3, 3}, -1.0, 1.0, rng);
  auto b = uniform_tensor<double>({3}, -1.0, 1.0, rng);
  for (auto [stride, pad] : {std::pair{1, 0}, {1, 1}, {2, 1}}) {
    auto y = conv2d(const_node(x), const_node(w), const_node(b), stride, pad);
    auto ref = testutil::conv2d_ref(x, w, b, stride, pad);
    REQUIRE(max_abs_diff(y->value, ref) < 1e-6);
  }
}

TEST_CASE("conv2d rejects mismatched channel axis") {
  auto x = const_node(Tensor<float>::zeros({1, 2, 4, 4}));
  auto w = const_node(Tensor<float>::zeros({1, 3, 3, 3}));
  auto b = const_node(Tensor<float>::zeros({1}));
  REQUIRE_THROWS_WITH(conv2d(x, w, b, 1, 0), Catch::Matchers::ContainsSubstring("channel axis"));
  auto small = const_node(Tensor<float>::zeros({1, 1, 2, 8}));
  auto k3 = const_node(Tensor<float>::zeros({1, 1, 3, 3}));
  REQUIRE_THROWS_WITH(conv2d(small, k3, b, 1, 0),
                      Catch::Matchers::ContainsSubstring("height axis"));
}

TEST_CASE("conv2d_transpose disjoint scatter of ones") {
  auto x = const_node(Tensor<float>::full({1, 1, 2, 2}, 1.0f));
  auto w = const_node(Tensor<float>::full({1, 1, 2, 2}, 1.0f));
  auto b = const_node(Tensor<float>::zeros({1}));
  auto y = conv2d_transpose(x, w, b, 2, 0);
  REQUIRE(y->value.shape == Shape{1, 1, 4, 4});
  for (float v : y->value.data) REQUIRE(v == Catch::Approx(1.0f));
}

TEST_CASE("conv2d_transpose 1x1 kernel scales input") {
  auto rng = testutil::rng(3);
  auto xt = uniform_tensor<float>({1, 1, 3, 3}, -1.0f, 1.0f, rng);
  Tensor<float> wt({1, 1, 1, 1});
  wt.data[0] = 2.5f;
  auto y = conv2d_transpose(const_node(xt), const_node(wt), const_node(Tensor<float>::zeros({1})),
                            1, 0);
  for (size_t i = 0; i < xt.data.size(); ++i)
    REQUIRE(y->value.data[i] == Catch::Approx(2.5f * xt.data[i]));
}

TEST_CASE("conv2d_transpose matches scatter oracle and conv adjoint") {
  auto rng = testutil::rng(19);
  auto x = uniform_tensor<double>({2, 3, 5, 4}, -1.0, 1.0, rng);
  auto w = uniform_tensor<double>({3, 2, 3, 3}, -1.0, 1.0, rng);
  auto b = uniform_tensor<double>({2}, -1.0, 1.0, rng);
  for (auto [stride, pad] : {std::pair{1, 0}, {2, 1}, {2, 0}}) {
    auto y = conv2d_transpose(const_node(x), const_node(w), const_node(b), stride, pad);
    auto ref = testutil::conv2d_transpose_ref(x, w, b, stride, pad);
    REQUIRE(max_abs_diff(y->value, ref) < 1e-6);

    // adjoint identity: <conv(u), x> == <u, conv_transpose(x)> with zero bias
    auto u = uniform_tensor<double>({2, 2, y->value.dim(2), y->value.dim(3)}, -1.0, 1.0, rng);
    auto cu = conv2d(const_node(u), const_node(w), const_node(Tensor<double>::zeros({3})),
                     stride, pad);
    REQUIRE(cu->value.shape == x.shape);
    double lhs = 0, rhs = 0;
    for (size_t i = 0; i < x.data.size(); ++i) lhs += cu->value.data[i] * x.data[i];
    auto tx = conv2d_transpose(const_node(x), const_node(w),
                               const_node(Tensor<double>::zeros({2})), stride, pad);
    for (size_t i = 0; i < u.data.size(); ++i) rhs += tx->value.data[i] * u.data[i];
    REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("activations hit their closed forms") {
  Tensor<float> xt({1, 1, 1, 3}, {-2.0f, 0.0f, 3.0f});
  auto x = const_node(xt);

  auto p = prelu(x, const_node(Tensor<float>::full({1}, 0.25f)));
  REQUIRE(p->value.data[0] == Catch::Approx(-0.5f));
  REQUIRE(p->value.data[1] == Catch::Approx(0.0f));
  REQUIRE(p->value.data[2] == Catch::Approx(3.0f));

  auto ident = prelu(x, const_node(Tensor<float>::full({1}, 1.0f)));
  REQUIRE(max_abs_diff(ident->value, xt) == 0.0);

  // prelu(a=0) == relu, exact
  auto rng = testutil::rng(5);
  auto rt = uniform_tensor<float>({2, 3, 4, 4}, -2.0f, 2.0f, rng);
  auto pz = prelu(const_node(rt), const_node(Tensor<float>::zeros({3})));
  auto rl = relu(const_node(rt));
  REQUIRE(max_abs_diff(pz->value, rl->value) == 0.0);

  REQUIRE(tanh_op(const_node(Tensor<float>::scalar(0.0f)))->value.data[0] == 0.0f);
  REQUIRE(sigmoid(const_node(Tensor<float>::scalar(0.0f)))->value.data[0] == Catch::Approx(0.5f));
}

TEST_CASE("batch_norm train-mode statistics") {
  auto rng = testutil::rng(23);
  auto xt = uniform_tensor<float>({4, 3, 6, 6}, -2.0f, 3.0f, rng);
  auto gamma = const_node(Tensor<float>::full({3}, 1.0f));
  auto beta = const_node(Tensor<float>::zeros({3}));
  BatchNormStats<float> stats(3);
  auto y = batch_norm(const_node(xt), gamma, beta, stats, BnMode::kTrain);

  // statistics oracle: per-channel mean ~0, variance ~1
  const int m = 4 * 6 * 6;
  for (int c = 0; c < 3; ++c) {
    double mean = 0, var = 0;
    for (int n = 0; n < 4; ++n)
      for (int h = 0; h < 6; ++h)
        for (int w = 0; w < 6; ++w) mean += y->value.at(n, c, h, w);
    mean /= m;
    for (int n = 0; n < 4; ++n)
      for (int h = 0; h < 6; ++h)
        for (int w = 0; w < 6; ++w) {
          double d = y->value.at(n, c, h, w) - mean;
          var += d * d;
        }
    var /= m;
    REQUIRE(std::abs(mean) < 1e-6);
    REQUIRE(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("batch_norm constant input collapses to beta") {
  auto x = const_node(Tensor<float>::full({2, 1, 3, 3}, 7.0f));
  auto gamma = const_node(Tensor<float>::full({1}, 1.0f));
  auto beta = const_node(Tensor<float>::full({1}, 5.0f));
  BatchNormStats<float> stats(1);
  auto y = batch_norm(const_node(x->value), gamma, beta, stats, BnMode::kTrain);
  for (float v : y->value.data) REQUIRE(v == Catch::Approx(5.0f).margin(1e-3));

  REQUIRE_THROWS_AS(batch_norm(const_node(Tensor<float>::zeros({1, 1, 1, 1})), gamma, beta,
                               stats, BnMode::kTrain),
                    Error);
}

TEST_CASE("batch_norm normalized input passes through") {
  // zero-mean unit-variance per channel already
  Tensor<float> xt({1, 1, 1, 4}, {-1.0f, 1.0f, -1.0f, 1.0f});
  BatchNormStats<float> stats(1);
  auto y = batch_norm(const_node(xt), const_node(Tensor<float>::full({1}, 1.0f)),
                      const_node(Tensor<float>::zeros({1})), stats, BnMode::kTrain);
  REQUIRE(max_abs_diff(y->value, xt) < 1e-4);
}

TEST_CASE("backward: linear loss gives grad equal to input") {
  Tensor<double> xt({1, 1, 1, 3}, {2.0, -3.0, 5.0});
  Param<double> w("w", Tensor<double>::full({1, 1, 1, 3}, 1.0));
  auto loss = sum_all(mul(w.node, const_node(xt)));
  backward(loss);
  REQUIRE(max_abs_diff(w.grad(), xt) == 0.0);
}

TEST_CASE("backward accumulates over two uses of one param") {
  Param<double> w("w", Tensor<double>::scalar(3.0));
  auto loss = add(scale(w.node, 2.0), scale(w.node, 5.0));
  backward(loss);
  REQUIRE(w.grad().data[0] == Catch::Approx(7.0));
}

TEST_CASE("backward on detached tensor errors") {
  auto x = const_node(Tensor<double>::scalar(1.0));
  REQUIRE_THROWS_AS(backward(x), Error);
  Param<double> w("w", Tensor<double>::scalar(1.0));
  REQUIRE_THROWS_AS(backward(w.node), Error);
}

TEST_CASE("conv mse gradients match finite differences") {
  auto rng = testutil::rng(31);
  auto xt = uniform_tensor<double>({1, 2, 5, 5}, -1.0, 1.0, rng);
  auto target = uniform_tensor<double>({1, 3, 3, 3}, -1.0, 1.0, rng);
  Param<double> w("w", he_uniform<double>({3, 2, 3, 3}, 18, rng));
  Param<double> b("b", uniform_tensor<double>({3}, -0.1, 0.1, rng));
  auto build = [&] {
    return mse(conv2d(constant(xt), w.node, b.node, 1, 0), constant(target));
  };
  REQUIRE(testutil::gradcheck(build, {&w, &b}) < 1e-5);
}

TEST_CASE("adam first step moves weight by roughly lr") {
  Param<float> w("w", Tensor<float>::scalar(1.0f));
  w.grad().data[0] = 1.0f;
  AdamState<float> st;
  adam_step(w, st, AdamConfig{});
  REQUIRE(w.value().data[0] == Catch::Approx(0.9999f).margin(1e-6));
  REQUIRE(st.t == 1);

  // zero grad leaves the weight unchanged
  Param<float> w2("w2", Tensor<float>::scalar(0.5f));
  w2.grad();
  AdamState<float> st2;
  adam_step(w2, st2, AdamConfig{});
  REQUIRE(w2.value().data[0] == 0.5f);
}

TEST_CASE("adam two steps match scalar recurrence oracle") {
  Param<double> w("w", Tensor<double>::scalar(1.0));
  AdamState<double> st;
  AdamConfig cfg;
  for (int step = 0; step < 2; ++step) {
    w.grad().data[0] = 1.0;
    adam_step(w, st, cfg);
  }
  // hand-rolled recurrence
  double m = 0, v = 0, x = 1.0;
  for (int t = 1; t <= 2; ++t) {
    m = cfg.beta1 * m + (1 - cfg.beta1) * 1.0;
    v = cfg.beta2 * v + (1 - cfg.beta2) * 1.0;
    double mh = m / (1 - std::pow(cfg.beta1, t));
    double vh = v / (1 - std::pow(cfg.beta2, t));
    x -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
  }
  REQUIRE(std::abs(w.value().data[0] - x) < 1e-12);
}

TEST_CASE("adam rejects non-finite gradients") {
  Param<float> w("w", Tensor<float>::scalar(1.0f));
  w.grad().data[0] = std::numeric_limits<float>::quiet_NaN();
  AdamState<float> st;
  REQUIRE_THROWS_AS(adam_step(w, st, AdamConfig{}), Error);
}

TEST_CASE("forward ops are deterministic across reruns") {
  for (int run = 0; run < 2; ++run) {
    auto rng = testutil::rng(77);
    auto x = uniform_tensor<float>({1, 2, 8, 8}, -1.0f, 1.0f, rng);
    auto w = he_uniform<float>({4, 2, 3, 3}, 18, rng);
    auto b = uniform_tensor<float>({4}, -0.1f, 0.1f, rng);
    auto y = tanh_op(conv2d(const_node(x), const_node(w), const_node(b), 2, 1));
    static std::vector<float> first;
    if (run == 0) {
      first = y->value.data;
    } else {
      REQUIRE(first == y->value.data);  // bit-identical
    }
  }
}

TEST_CASE("checkpoint round trip preserves params bit-exactly") {
  auto rng = testutil::rng(41);
  Param<float> a("enc.w", he_uniform<float>({4, 2, 3, 3}, 18, rng));
  Param<float> b("enc.b", uniform_tensor<float>({4}, -1.0f, 1.0f, rng));
  std::string path = "checkpoint_test.licw";
  save_checkpoint<float>(path, {&a, &b});

  Param<float> a2("enc.w", Tensor<float>::zeros({4, 2, 3, 3}));
  Param<float> b2("enc.b", Tensor<float>::zeros({4}));
  load_checkpoint<float>(path, {&a2, &b2});
  REQUIRE(a2.value().data == a.value().data);
  REQUIRE(b2.value().data == b.value().data);
  std::remove(path.c_str());

  Param<float> wrong("enc.missing", Tensor<float>::zeros({4}));
  REQUIRE_THROWS_AS(load_checkpoint<float>(path + "x", {&wrong}), Error);
}

TEST_CASE("finite differences cover every layer type") {
  auto rng = testutil::rng(53);

  SECTION("conv2d_transpose") {
    auto xt = uniform_tensor<double>({1, 2, 3, 3}, -1.0, 1.0, rng);
    Param<double> w("w", he_uniform<double>({2, 3, 3, 3}, 18, rng));
    Param<double> b("b", uniform_tensor<double>({3}, -0.1, 0.1, rng));
    auto build = [&] {
      return mean_all(square(conv2d_transpose(constant(xt), w.node, b.node, 2, 1)));
    };
    REQUIRE(testutil::gradcheck(build, {&w, &b}) < 1e-5);
  }
  SECTION("prelu") {
    auto xt = uniform_tensor<double>({2, 3, 4, 4}, -1.0, 1.0, rng);
    Param<double> a("a", Tensor<double>::full({3}, 0.25));
    Param<double> x("x", xt);
    auto build = [&] { return mean_all(square(prelu(x.node, a.node))); };
    REQUIRE(testutil::gradcheck(build, {&a, &x}) < 1e-5);
  }
  SECTION("batch_norm") {
    auto xt = uniform_tensor<double>({3, 2, 4, 4}, -1.0, 1.0, rng);
    Param<double> x("x", xt);
    Param<double> g("g", Tensor<double>::full({2}, 1.2));
    Param<double> be("be", Tensor<double>::full({2}, -0.3));
    BatchNormStats<double> stats(2);
    auto build = [&] {
      BatchNormStats<double> local = stats;  // keep running stats untouched
      return mean_all(square(batch_norm(x.node, g.node, be.node, local, BnMode::kTrain)));
    };
    REQUIRE(testutil::gradcheck(build, {&x, &g, &be}) < 1e-5);
  }
  SECTION("linear + sigmoid + bce") {
    auto xt = uniform_tensor<double>({4, 6}, -1.0, 1.0, rng);
    auto xf = uniform_tensor<double>({4, 6}, -1.0, 1.0, rng);
    Param<double> w("w", he_uniform<double>({1, 6}, 6, rng));
    Param<double> b("b", uniform_tensor<double>({1}, -0.1, 0.1, rng));
    auto build = [&] {
      auto dr = sigmoid(linear(constant(xt), w.node, b.node));
      auto df = sigmoid(linear(constant(xf), w.node, b.node));
      return bce_d_loss(dr, df);
    };
    REQUIRE(testutil::gradcheck(build, {&w, &b}) < 1e-5);
  }
  SECTION("tanh") {
    Param<double> x("x", uniform_tensor<double>({2, 2, 3, 3}, -1.5, 1.5, rng));
    auto build = [&] { return mean_all(square(tanh_op(x.node))); };
    REQUIRE(testutil::gradcheck(build, {&x}) < 1e-5);
  }
}
