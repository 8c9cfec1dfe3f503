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

#include "licomp/gan.hpp"
#include "licomp/metrics.hpp"
#include "testutil.hpp"

using namespace licomp;

namespace {

GanModel<float> tiny_model(int code_size = 32, uint64_t seed = 1) {
  GanConfig cfg;
  cfg.tile = 32;  // keeps unit tests quick; acceptance runs the 128 tile
  cfg.code_size = code_size;
  return GanModel<float>::make(cfg, seed);
}

std::vector<NodePtr<double>> const_taps(const std::vector<double>& means) {
  std::vector<NodePtr<double>> taps;
  for (double m : means) taps.push_back(constant(Tensor<double>::full({1, 1, 2, 2}, m)));
  return taps;
}

}  // namespace

TEST_CASE("gan generator loss closed forms") {
  auto x = constant(Tensor<double>({1, 1, 1, 2}, {1.0, 0.0}));

  // identical reconstruction and taps -> 0
  auto taps = const_taps({0.1, 0.2, 0.3, 0.4, 0.5});
  REQUIRE(gan_g_loss(x, x, taps, taps, 0.01)->value.data[0] == 0.0);

  // beta = 0 reduces to the MSE distortion term
  auto x_hat = constant(Tensor<double>::zeros({1, 1, 1, 2}));
  auto other = const_taps({0.5, 0.4, 0.3, 0.2, 0.1});
  REQUIRE(gan_g_loss(x, x_hat, taps, other, 0.0)->value.data[0] == Catch::Approx(0.5));

  // MSE 0.5, five taps each contributing mean-square 0.1, beta 0.01 -> 0.505
  std::vector<NodePtr<double>> ta, tb;
  for (int i = 0; i < 5; ++i) {
    ta.push_back(constant(Tensor<double>::zeros({1, 1, 1, 1})));
    tb.push_back(constant(Tensor<double>::full({1, 1, 1, 1}, std::sqrt(0.1))));
  }
  REQUIRE(gan_g_loss(x, x_hat, ta, tb, 0.01)->value.data[0] == Catch::Approx(0.505));

  auto bad = const_taps({1, 2, 3, 4});
  REQUIRE_THROWS_AS(gan_g_loss(x, x, bad, bad, 0.01), Error);
}

TEST_CASE("gan discriminator loss closed forms") {
  auto half = constant(Tensor<double>::full({4, 1}, 0.5));
  REQUIRE(gan_d_loss(half, half)->value.data[0] == Catch::Approx(2.0 * std::log(2.0)));

  auto one = constant(Tensor<double>::full({4, 1}, 1.0));
  auto zero = constant(Tensor<double>::zeros({4, 1}));
  REQUIRE(gan_d_loss(one, zero)->value.data[0] == Catch::Approx(0.0).margin(1e-5));

  // label swap with complemented outputs is an algebraic identity
  auto rng = testutil::rng(5);
  auto dr = uniform_tensor<double>({6, 1}, 0.05, 0.95, rng);
  auto df = uniform_tensor<double>({6, 1}, 0.05, 0.95, rng);
  Tensor<double> cr = dr, cf = df;
  for (auto& v : cr.data) v = 1.0 - v;
  for (auto& v : cf.data) v = 1.0 - v;
  double a = gan_d_loss(constant(dr), constant(df))->value.data[0];
  double b = gan_d_loss(constant(cf), constant(cr))->value.data[0];
  REQUIRE(a == Catch::Approx(b).epsilon(1e-12));
}

TEST_CASE("Eq-2-style loss with beta=0 equals the CAE distortion term") {
  auto rng = testutil::rng(7);
  auto x = constant(uniform_tensor<double>({1, 3, 8, 8}, -1.0, 1.0, rng));
  auto x_hat = constant(uniform_tensor<double>({1, 3, 8, 8}, -1.0, 1.0, rng));
  auto taps = const_taps({1, 2, 3, 4, 5});
  double g = gan_g_loss(x, x_hat, taps, const_taps({5, 4, 3, 2, 1}), 0.0)->value.data[0];
  REQUIRE(g == mse(x, x_hat)->value.data[0]);
}

TEST_CASE("gan generator loss passes finite differences") {
  auto rng = testutil::rng(11);
  Param<double> w("w", he_uniform<double>({2, 1, 3, 3}, 9, rng));
  Param<double> b("b", Tensor<double>::zeros({2}));
  auto x = uniform_tensor<double>({1, 1, 6, 6}, -1.0, 1.0, rng);
  auto target = uniform_tensor<double>({1, 2, 4, 4}, -1.0, 1.0, rng);

  // taps derived from small convs so gradients flow through both paths
  auto build = [&] {
    auto x_hat = conv2d(constant(x), w.node, b.node, 1, 0);
    std::vector<NodePtr<double>> ta, tb;
    for (int i = 0; i < 5; ++i) {
      ta.push_back(scale(constant(target), 1.0 + 0.1 * i));
      tb.push_back(scale(x_hat, 0.5 + 0.1 * i));
    }
    return gan_g_loss(constant(target), x_hat, ta, tb, 0.01);
  };
  REQUIRE(testutil::gradcheck(build, {&w, &b}) < 1e-5);
}

TEST_CASE("encoder output length is exactly N regardless of content") {
  auto model = tiny_model(48);
  auto rng = testutil::rng(3);
  for (int trial = 0; trial < 2; ++trial) {
    auto x = constant(uniform_tensor<float>({1, 3, 32, 32}, -1.0f, 1.0f, rng));
    auto code = model.encode_code(x, BnMode::kInfer);
    REQUIRE(code->value.shape == Shape{1, 48});
  }
  auto gen = model.generate(constant(Tensor<float>::zeros({1, 48})), BnMode::kInfer);
  REQUIRE(gen->value.shape == Shape{1, 3, 32, 32});
  for (float v : gen->value.data) {
    REQUIRE(v >= -1.0f);
    REQUIRE(v <= 1.0f);
  }
  auto d = model.discriminate(constant(Tensor<float>::zeros({1, 3, 32, 32})), BnMode::kInfer);
  REQUIRE(d.taps.size() == 5);
  REQUIRE(d.prob->value.numel() == 1);
}

TEST_CASE("gan training step runs and is deterministic") {
  GanConfig cfg;
  cfg.tile = 32;
  cfg.code_size = 32;
  auto rng = testutil::rng(13);
  Tensor<float> batch = uniform_tensor<float>({2, 3, 32, 32}, -1.0f, 1.0f, rng);

  std::vector<float> first;
  for (int run = 0; run < 2; ++run) {
    auto model = GanModel<float>::make(cfg, 21);
    AdamOptimizer<float> g_opt(model.generator_params(), AdamConfig{});
    AdamOptimizer<float> d_opt(model.discriminator_params(), AdamConfig{});
    std::vector<float> losses;
    for (int i = 0; i < 2; ++i) {
      auto [g, d] = gan_train_step(model, batch, g_opt, d_opt);
      losses.push_back(g);
      losses.push_back(d);
    }
    if (run == 0)
      first = losses;
    else
      REQUIRE(first == losses);
  }

  auto model = GanModel<float>::make(cfg, 21);
  AdamOptimizer<float> g_opt(model.generator_params(), AdamConfig{});
  AdamOptimizer<float> d_opt(model.discriminator_params(), AdamConfig{});
  Tensor<float> bad = Tensor<float>::full({1, 3, 32, 32}, 2.0f);
  REQUIRE_THROWS_AS(gan_train_step(model, bad, g_opt, d_opt), Error);
}

TEST_CASE("feature matching pulls tap distances down") {
  // paired runs from one seed: training with beta=0.01 should end with a
  // smaller summed tap distance than beta=0
  auto rng = testutil::rng(41);
  Tensor<float> batch = uniform_tensor<float>({2, 3, 32, 32}, -0.8f, 0.8f, rng);

  auto tap_distance = [&](GanModel<float>& model) {
    auto x = constant(batch);
    auto x_hat = model.generate(model.encode_code(x, BnMode::kInfer), BnMode::kInfer);
    auto tr = model.discriminate(x, BnMode::kInfer);
    auto tf = model.discriminate(x_hat, BnMode::kInfer);
    double sum = 0;
    for (int i = 0; i < 5; ++i) sum += mse(tr.taps[i], tf.taps[i])->value.data[0];
    return sum;
  };

  std::vector<double> final_distance;
  for (float beta : {0.0f, 0.01f}) {
    GanConfig cfg;
    cfg.tile = 32;
    cfg.code_size = 32;
    cfg.beta = beta;
    auto model = GanModel<float>::make(cfg, 21);
    AdamOptimizer<float> g_opt(model.generator_params(), AdamConfig{.lr = 5e-4});
    AdamOptimizer<float> d_opt(model.discriminator_params(), AdamConfig{.lr = 5e-4});
    for (int i = 0; i < 400; ++i) gan_train_step(model, batch, g_opt, d_opt);
    final_distance.push_back(tap_distance(model));
  }
  REQUIRE(final_distance[1] < final_distance[0]);
}

TEST_CASE("gan encode rate arithmetic and tiling") {
  auto model = tiny_model(32, 7);
  GanConfig cfg = model.config;
  cfg.quant_bits = 8;
  Image img = testutil::synth_image(160, 96, 31, 0.1, 3);  // 5x3 grid of 32-tiles
  Bitstream bs = gan_encode(img, model, cfg);

  ByteReader r(bs.bytes);
  auto prefix = read_container_prefix(r);
  REQUIRE(prefix.codec_id == CodecId::kGan);
  REQUIRE(r.u16() == 32);                    // tile
  REQUIRE(r.u16() == 32);                    // N
  REQUIRE(r.u16() == 100);                   // scale x100
  REQUIRE(r.u8() == 8);                      // bits
  REQUIRE(r.u8() == 0);                      // pca skipped: 15 tiles < 2N
  int tiles_x = r.u16(), tiles_y = r.u16();
  REQUIRE(tiles_x == 5);
  REQUIRE(tiles_y == 3);
  CodedBlockMeta meta = read_coded_block_meta(r, false);
  REQUIRE(meta.symbol_count == 15u * 32u);

  // pre-entropy ceiling: symbols * bits / pixels (tile 32 here)
  double ceiling_bpp = 15.0 * 32 * 8 / (160.0 * 96);
  REQUIRE(ceiling_bpp == Catch::Approx(0.25));

  // paper-scale shape arithmetic: a 1280x768 image under the 128 tile at
  // scale 1.0 with N=64 yields 60 tiles and a 0.03125 bpp ceiling
  int tiles128 = (1280 / 128) * (768 / 128);
  REQUIRE(tiles128 == 60);
  REQUIRE(tiles128 * 64.0 * 8 / (1280.0 * 768) == Catch::Approx(0.03125));
}

TEST_CASE("bpp strictly increases with code size N") {
  Image img = testutil::synth_image(96, 64, 17, 0.1, 3);
  size_t last = 0;
  for (int n : {16, 32, 64}) {
    auto model = tiny_model(n, 5);
    Bitstream bs = gan_encode(img, model, model.config);
    REQUIRE(bs.size_bytes() > last);
    last = bs.size_bytes();
  }
}

TEST_CASE("rate is strictly ordered in the quantizer bits") {
  auto model = tiny_model(32, 5);
  Image img = testutil::synth_image(96, 64, 19, 0.1, 3);
  size_t last = 0;
  for (int bits : {5, 6, 7, 8}) {
    GanConfig cfg = model.config;
    cfg.quant_bits = bits;
    Bitstream bs = gan_encode(img, model, cfg);
    REQUIRE(bs.size_bytes() > last);
    last = bs.size_bytes();
  }
}

TEST_CASE("single-tile images take an exact no-stitching path") {
  auto model = tiny_model(32, 23);
  Image img = testutil::synth_image(32, 32, 29, 0.1, 3);
  Image decoded = gan_decode(gan_encode(img, model, model.config), model);

  // manual path: encode the tile, generate, render; single-tile quantization
  // is exact (per-component min == max), so this must agree bit for bit
  Tensor<float> tile({1, 3, 32, 32});
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 32 * 32; ++i)
      tile.data[static_cast<size_t>(c) * 32 * 32 + i] = img.planes[c][i] / 127.5f - 1.0f;
  auto code = model.encode_code(constant(tile), BnMode::kInfer);
  auto gen = model.generate(code, BnMode::kInfer);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 32 * 32; ++i) {
      float v = (gen->value.data[static_cast<size_t>(c) * 32 * 32 + i] + 1.0f) * 127.5f;
      REQUIRE(decoded.planes[c][i] == std::min(255.0f, std::max(0.0f, std::round(v))));
    }
}

TEST_CASE("gan decode matches the encoder reconstruction and original dims") {
  auto model = tiny_model(32, 9);
  GanConfig cfg = model.config;
  cfg.interp_scale = 2.0;
  Image img = testutil::synth_image(40, 24, 3, 0.05, 3);  // scaled to 80x48 -> padded
  Image local;
  Bitstream bs = gan_encode(img, model, cfg, &local);
  Image decoded = gan_decode(bs, model);
  REQUIRE(decoded.width == img.width);
  REQUIRE(decoded.height == img.height);
  REQUIRE(decoded.planes == local.planes);

  Bitstream copy = gan_encode(img, model, cfg);
  REQUIRE(copy.bytes == bs.bytes);  // deterministic
}

TEST_CASE("gan stream validation") {
  auto model = tiny_model(32, 9);
  Image img = testutil::synth_image(32, 32, 3, 0.05, 3);
  Bitstream bs = gan_encode(img, model, model.config);

  auto corrupt = bs;
  corrupt.bytes[4] = 7;  // bad codec id
  REQUIRE_THROWS_AS(gan_decode(corrupt, model), Error);

  auto other = tiny_model(16, 2);
  REQUIRE_THROWS_AS(gan_decode(bs, other), Error);

  Image small = testutil::synth_image(16, 16, 4, 0.0, 3);
  REQUIRE_THROWS_AS(gan_encode(small, model, model.config), Error);

  Image ycc = convert_colorspace(img, Colorspace::kYCbCr);
  REQUIRE_THROWS_AS(gan_encode(ycc, model, model.config), Error);
}
