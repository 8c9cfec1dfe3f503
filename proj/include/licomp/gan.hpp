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

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "licomp/bitstream.hpp"
#include "licomp/image.hpp"
#include "licomp/layers.hpp"
#include "licomp/range_coder.hpp"
#include "licomp/resample.hpp"

namespace licomp {

// GAN codec: a DCGAN-shaped generator as the decoder, an encoder shaped like
// the discriminator producing a length-N code per 128x128 tile, and the
// discriminator supplying the five feature-matching taps of the generator
// loss. Variable rate comes from bicubic pre-interpolation, the code size N
// and the quantizer bit depth.
struct GanConfig {
  int tile = 128;
  int code_size = 128;          // N
  double interp_scale = 1.0;    // bicubic pre-scaling factor
  int quant_bits = 8;
  float beta = 0.01f;           // feature-matching weight
  bool use_pca = false;

  void validate() const {
    if (tile < 32 || (tile & (tile - 1)) != 0)
      fail(ErrorKind::kDimension, "gan: tile must be a power of two >= 32");
    if (code_size < 16) fail(ErrorKind::kDimension, "gan: code size must be >= 16");
    if (interp_scale < 0.25 || interp_scale > 8.0)
      fail(ErrorKind::kDimension, "gan: interpolation scale out of range");
    check_bits(quant_bits);
  }
};

namespace detail {
inline constexpr std::array<int, 5> kGanWidths = {16, 32, 64, 128, 256};
}

// Weight layout: E and D are five stride-2 4x4 convs (3->16->32->64->128->256,
// leaky-ReLU 0.2, batch norm except on the first layer) plus a final linear;
// G projects N -> 4x4x256 and mirrors upward with five stride-2 transposed
// convs, ReLU + batch norm, tanh output.
template <typename T>
struct GanModel {
  GanConfig config;

  struct ConvStack {
    std::vector<Conv2dLayer<T>> conv;
    std::vector<BatchNormLayer<T>> bn;  // entries 1..4 (none for layer 0)
    LinearLayer<T> head;
  };
  ConvStack enc, disc;

  LinearLayer<T> g_proj;
  BatchNormLayer<T> g_proj_bn;
  std::vector<ConvTranspose2dLayer<T>> g_deconv;
  std::vector<BatchNormLayer<T>> g_bn;  // for all but the output layer

  int end_spatial() const { return config.tile / 32; }
  int flat_features() const { return 256 * end_spatial() * end_spatial(); }

  static GanModel make(const GanConfig& cfg, uint64_t seed) {
    cfg.validate();
    GanModel m;
    m.config = cfg;
    std::mt19937_64 rng(seed);

    auto make_stack = [&](const std::string& base, int head_out) {
      ConvStack s;
      int cin = 3;
      for (int i = 0; i < 5; ++i) {
        int cout = detail::kGanWidths[i];
        s.conv.push_back(
            Conv2dLayer<T>::make(base + ".conv" + std::to_string(i), cin, cout, 4, 2, 1, rng));
        if (i > 0) s.bn.push_back(BatchNormLayer<T>::make(base + ".bn" + std::to_string(i), cout));
        cin = cout;
      }
      s.head = LinearLayer<T>::make(base + ".head", m.flat_features(), head_out, rng);
      return s;
    };
    m.enc = make_stack("enc", cfg.code_size);
    m.disc = make_stack("disc", 1);

    m.g_proj = LinearLayer<T>::make("gen.proj", cfg.code_size, m.flat_features(), rng);
    m.g_proj_bn = BatchNormLayer<T>::make("gen.proj_bn", 256);
    int cin = 256;
    for (int i = 0; i < 5; ++i) {
      int cout = i < 4 ? detail::kGanWidths[3 - i] : 3;
      m.g_deconv.push_back(ConvTranspose2dLayer<T>::make("gen.deconv" + std::to_string(i), cin,
                                                         cout, 4, 2, 1, rng));
      if (i < 4) m.g_bn.push_back(BatchNormLayer<T>::make("gen.bn" + std::to_string(i), cout));
      cin = cout;
    }
    return m;
  }

  NodePtr<T> run_stack(ConvStack& s, const NodePtr<T>& x, BnMode mode,
                       std::vector<NodePtr<T>>* taps = nullptr) {
    NodePtr<T> h = x;
    for (int i = 0; i < 5; ++i) {
      h = s.conv[i](h);
      if (taps) taps->push_back(h);  // pre-activation tap
      if (i > 0) h = s.bn[i - 1](h, mode);
      h = leaky_relu(h, T(0.2));
    }
    int n = h->value.dim(0);
    return s.head(reshape(h, {n, flat_features()}));
  }

  // Tile (in [-1,1]) to code of length N.
  NodePtr<T> encode_code(const NodePtr<T>& x, BnMode mode) { return run_stack(enc, x, mode); }

  NodePtr<T> generate(const NodePtr<T>& code, BnMode mode) {
    int n = code->value.dim(0);
    NodePtr<T> h = reshape(g_proj(code), {n, 256, end_spatial(), end_spatial()});
    h = relu(g_proj_bn(h, mode));
    for (int i = 0; i < 5; ++i) {
      h = g_deconv[i](h);
      if (i < 4)
        h = relu(g_bn[i](h, mode));
      else
        h = tanh_op(h);
    }
    return h;
  }

  struct DiscOut {
    NodePtr<T> prob;
    std::vector<NodePtr<T>> taps;  // exactly 5 pre-activation conv outputs
  };
  DiscOut discriminate(const NodePtr<T>& x, BnMode mode) {
    DiscOut out;
    out.prob = sigmoid(run_stack(disc, x, mode, &out.taps));
    return out;
  }

  std::vector<Param<T>*> generator_params() {  // G and E train together on Eq-2-style loss
    std::vector<Param<T>*> out;
    for (auto& l : enc.conv) l.collect(out);
    for (auto& l : enc.bn) l.collect(out);
    enc.head.collect(out);
    g_proj.collect(out);
    g_proj_bn.collect(out);
    for (auto& l : g_deconv) l.collect(out);
    for (auto& l : g_bn) l.collect(out);
    return out;
  }
  std::vector<Param<T>*> discriminator_params() {
    std::vector<Param<T>*> out;
    for (auto& l : disc.conv) l.collect(out);
    for (auto& l : disc.bn) l.collect(out);
    disc.head.collect(out);
    return out;
  }
  std::vector<Param<T>*> state_params() {  // checkpoint set: weights + BN running stats
    std::vector<Param<T>*> out;
    for (auto& l : enc.conv) l.collect(out);
    for (auto& l : enc.bn) l.collect_state(out);
    enc.head.collect(out);
    for (auto& l : disc.conv) l.collect(out);
    for (auto& l : disc.bn) l.collect_state(out);
    disc.head.collect(out);
    g_proj.collect(out);
    g_proj_bn.collect_state(out);
    for (auto& l : g_deconv) l.collect(out);
    for (auto& l : g_bn) l.collect_state(out);
    return out;
  }
};

// Generator objective: MSE plus beta times the summed per-tap mean-square
// discriminator feature distances.
template <typename T>
NodePtr<T> gan_g_loss(const NodePtr<T>& x, const NodePtr<T>& x_hat,
                      const std::vector<NodePtr<T>>& taps_x,
                      const std::vector<NodePtr<T>>& taps_xhat, T beta) {
  if (taps_x.size() != 5 || taps_xhat.size() != 5)
    fail(ErrorKind::kDimension, "gan_g_loss: expected 5 discriminator taps");
  auto loss = mse(x, x_hat);
  NodePtr<T> fm;
  for (size_t i = 0; i < 5; ++i) {
    if (!taps_x[i]->value.same_shape(taps_xhat[i]->value))
      fail(ErrorKind::kDimension, "gan_g_loss: tap " + std::to_string(i) + " shape mismatch");
    auto term = mse(taps_x[i], taps_xhat[i]);
    fm = fm ? add(fm, term) : term;
  }
  return add(loss, scale(fm, beta));
}

template <typename T>
NodePtr<T> gan_d_loss(const NodePtr<T>& d_real, const NodePtr<T>& d_fake) {
  return bce_d_loss(d_real, d_fake);
}

// Alternating DCGAN-style update: D on (real, frozen fake), then G+E on the
// feature-matching objective with gradients flowing through a frozen D.
template <typename T>
std::pair<T, T> gan_train_step(GanModel<T>& model, const Tensor<T>& batch,
                               AdamOptimizer<T>& g_opt, AdamOptimizer<T>& d_opt) {
  if (batch.rank() != 4 || batch.dim(1) != 3 || batch.dim(2) != model.config.tile ||
      batch.dim(3) != model.config.tile)
    fail(ErrorKind::kDimension, "gan_train_step: batch must be [N,3,tile,tile]");
  for (T v : batch.data)
    if (v < T(-1) - T(1e-4) || v > T(1) + T(1e-4))
      fail(ErrorKind::kDimension, "gan_train_step: tiles must lie in [-1,1]");

  // D step; the reconstruction is detached so only D learns here.
  auto x = constant(batch);
  auto fake = model.generate(model.encode_code(x, BnMode::kTrain), BnMode::kTrain);
  auto fake_detached = constant(fake->value);
  auto d_real = model.discriminate(x, BnMode::kTrain);
  auto d_fake = model.discriminate(fake_detached, BnMode::kTrain);
  auto dl = gan_d_loss(d_real.prob, d_fake.prob);
  T d_value = dl->value.data[0];
  backward(dl);
  d_opt.step();

  // G+E step through a frozen D.
  auto x2 = constant(batch);
  auto x_hat = model.generate(model.encode_code(x2, BnMode::kTrain), BnMode::kTrain);
  auto taps_real = model.discriminate(x2, BnMode::kTrain);
  auto taps_fake = model.discriminate(x_hat, BnMode::kTrain);
  auto gl = gan_g_loss(x2, x_hat, taps_real.taps, taps_fake.taps,
                       static_cast<T>(model.config.beta));
  T g_value = gl->value.data[0];
  backward(gl);
  g_opt.step();
  for (auto* p : model.discriminator_params()) p->zero_grad();

  if (!std::isfinite(static_cast<double>(g_value)) || !std::isfinite(static_cast<double>(d_value)))
    fail(ErrorKind::kNumeric, "gan_train_step: non-finite loss");
  return {g_value, d_value};
}

namespace detail {

template <typename T>
Tensor<T> tile_to_tensor(const Image& rgb, int x0, int y0, int tile) {
  Tensor<T> t({1, 3, tile, tile});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < tile; ++y)
      for (int x = 0; x < tile; ++x) {
        int sy = std::min(y0 + y, rgb.height - 1);
        int sx = std::min(x0 + x, rgb.width - 1);
        float v = rgb.planes[c][static_cast<size_t>(sy) * rgb.width + sx];
        t.at(0, c, y, x) = static_cast<T>(v / 127.5f - 1.0f);
      }
  return t;
}

}  // namespace detail

template <typename T>
Image gan_decode(const Bitstream& bs, GanModel<T>& model);

// Container codec_id 1. Codec header: tile u16, code_size u16,
// interp_scale_x100 u16, quant_bits u8, use_pca u8, tiles_x u16, tiles_y u16,
// then the coded-block meta sized to N (PCA fields present iff use_pca).
template <typename T>
Bitstream gan_encode(const Image& img, GanModel<T>& model, const GanConfig& cfg,
                     Image* local_recon = nullptr) {
  cfg.validate();
  if (cfg.tile != model.config.tile || cfg.code_size != model.config.code_size)
    fail(ErrorKind::kDimension, "gan_encode: config geometry does not match the model");
  if (img.depth != Depth::kU8) fail(ErrorKind::kDimension, "gan_encode: expects an 8-bit image");
  if (img.colorspace == Colorspace::kYCbCr)
    fail(ErrorKind::kDimension, "gan_encode: input must be RGB (no colorspace conversion)");
  Image rgb = img.colorspace == Colorspace::kGray ? convert_colorspace(img, Colorspace::kRgb)
                                                  : img;

  // snap to the wire precision so encoder and decoder agree on scaled dims
  const double scale = std::lround(cfg.interp_scale * 100.0) / 100.0;
  Image scaled = scale == 1.0 ? rgb : resample(rgb, scale, ResampleKernel::kBicubic);
  const int tile = cfg.tile;
  if (scaled.width < tile || scaled.height < tile)
    fail(ErrorKind::kDimension, "gan_encode: image smaller than one tile after scaling");
  const int tiles_x = (scaled.width + tile - 1) / tile;
  const int tiles_y = (scaled.height + tile - 1) / tile;
  const int tiles = tiles_x * tiles_y;
  const int n_code = cfg.code_size;

  // per-tile codes, raster order
  std::vector<float> codes_flat(static_cast<size_t>(tiles) * n_code);
  for (int ty = 0; ty < tiles_y; ++ty)
    for (int tx = 0; tx < tiles_x; ++tx) {
      auto t = detail::tile_to_tensor<T>(scaled, tx * tile, ty * tile, tile);
      auto code = model.encode_code(constant(std::move(t)), BnMode::kInfer);
      float* dst = codes_flat.data() + (static_cast<size_t>(ty) * tiles_x + tx) * n_code;
      for (int i = 0; i < n_code; ++i) dst[i] = static_cast<float>(code->value.data[i]);
    }

  // optional PCA over the set of tile codes (needs enough samples)
  bool apply_pca = cfg.use_pca && tiles >= 2 * n_code;
  PcaBasis basis;
  FeatureBlock fb = FeatureBlock::make(n_code, 1, tiles);
  if (apply_pca) {
    basis = pca_fit(codes_flat.data(), tiles, n_code);
    for (int t = 0; t < tiles; ++t)
      for (int c = 0; c < n_code; ++c) {
        float acc = 0.0f;
        for (int k = 0; k < n_code; ++k)
          acc += basis.row(c, k) * (codes_flat[static_cast<size_t>(t) * n_code + k] - basis.mean[k]);
        fb.plane(c)[t] = acc;
      }
  } else {
    for (int t = 0; t < tiles; ++t)
      for (int c = 0; c < n_code; ++c)
        fb.plane(c)[t] = codes_flat[static_cast<size_t>(t) * n_code + c];
  }

  auto [codes, qp] = quantize(fb, cfg.quant_bits);
  auto coded = range_encode(codes, 1u << cfg.quant_bits);

  ByteWriter out;
  write_container_prefix(out, {CodecId::kGan, static_cast<uint32_t>(img.width),
                               static_cast<uint32_t>(img.height)});
  out.u16(static_cast<uint16_t>(tile));
  out.u16(static_cast<uint16_t>(n_code));
  out.u16(static_cast<uint16_t>(std::lround(scale * 100.0)));
  out.u8(static_cast<uint8_t>(cfg.quant_bits));
  out.u8(apply_pca ? 1 : 0);
  out.u16(static_cast<uint16_t>(tiles_x));
  out.u16(static_cast<uint16_t>(tiles_y));
  CodedBlockMeta meta;
  meta.qp = qp;
  meta.has_pca = apply_pca;
  meta.basis = basis;
  meta.symbol_count = static_cast<uint32_t>(codes.size());
  write_coded_block_meta(out, meta);
  out.u32(static_cast<uint32_t>(coded.size()));
  out.raw(coded);
  Bitstream bs{out.take()};

  if (local_recon) *local_recon = gan_decode(bs, model);
  return bs;
}

template <typename T>
Image gan_decode(const Bitstream& bs, GanModel<T>& model) {
  ByteReader r(bs.bytes);
  ContainerPrefix prefix = read_container_prefix(r);
  if (prefix.codec_id != CodecId::kGan)
    fail(ErrorKind::kFormat, "gan_decode: stream was produced by a different codec");
  int tile = r.u16();
  int n_code = r.u16();
  double interp_scale = r.u16() / 100.0;
  int quant_bits = r.u8();
  bool has_pca = r.u8() != 0;
  int tiles_x = r.u16();
  int tiles_y = r.u16();
  if (tile != model.config.tile || n_code != model.config.code_size)
    fail(ErrorKind::kFormat, "gan_decode: model geometry does not match the stream header");
  CodedBlockMeta meta = read_coded_block_meta(r, has_pca);
  if (static_cast<int>(meta.qp.min.size()) != n_code || meta.qp.bits != quant_bits)
    fail(ErrorKind::kFormat, "gan_decode: corrupt quantizer header");
  const int tiles = tiles_x * tiles_y;
  if (meta.symbol_count != static_cast<uint32_t>(tiles) * n_code)
    fail(ErrorKind::kFormat, "gan_decode: tile count does not match the symbol count");
  uint32_t coded_len = r.u32();
  auto coded = r.raw(coded_len);

  auto codes = range_decode(coded, meta.symbol_count, 1u << quant_bits);
  FeatureBlock fb = dequantize(codes, meta.qp, 1, tiles);

  const int sw = std::max<int>(tile, static_cast<int>(std::lround(prefix.width * interp_scale)));
  const int sh = std::max<int>(tile, static_cast<int>(std::lround(prefix.height * interp_scale)));
  Image stitched = Image::make(tiles_x * tile, tiles_y * tile, 3, Colorspace::kRgb);

  std::vector<float> code(n_code);
  for (int ty = 0; ty < tiles_y; ++ty)
    for (int tx = 0; tx < tiles_x; ++tx) {
      int t = ty * tiles_x + tx;
      if (has_pca) {
        for (int k = 0; k < n_code; ++k) {
          float acc = meta.basis.mean[k];
          for (int c = 0; c < n_code; ++c) acc += meta.basis.row(c, k) * fb.plane(c)[t];
          code[k] = acc;
        }
      } else {
        for (int c = 0; c < n_code; ++c) code[c] = fb.plane(c)[t];
      }
      Tensor<T> ct({1, n_code});
      for (int i = 0; i < n_code; ++i) ct.data[i] = static_cast<T>(code[i]);
      auto gen = model.generate(constant(std::move(ct)), BnMode::kInfer);
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < tile; ++y)
          for (int x = 0; x < tile; ++x) {
            float v = (static_cast<float>(gen->value.at(0, c, y, x)) + 1.0f) * 127.5f;
            stitched.planes[c][(static_cast<size_t>(ty) * tile + y) * stitched.width +
                               tx * tile + x] = std::min(255.0f, std::max(0.0f, std::round(v)));
          }
    }

  // crop the tiling pad, then undo the pre-interpolation
  Image cropped = Image::make(sw, sh, 3, Colorspace::kRgb);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < sh; ++y)
      for (int x = 0; x < sw; ++x)
        cropped.planes[c][static_cast<size_t>(y) * sw + x] =
            stitched.planes[c][static_cast<size_t>(y) * stitched.width + x];
  if (sw == static_cast<int>(prefix.width) && sh == static_cast<int>(prefix.height))
    return cropped;
  return resample_to(cropped, static_cast<int>(prefix.width), static_cast<int>(prefix.height),
                     ResampleKernel::kBicubic);
}

}  // namespace licomp
