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

#include "licomp/bitstream.hpp"
#include "licomp/image.hpp"
#include "licomp/layers.hpp"
#include "licomp/range_coder.hpp"

namespace licomp {

// Convolutional autoencoder codec. The loss is the rate-distortion objective
//   J = mean((x - x_hat)^2) + lambda * mean(y^2)
// with uniform noise on the latent during training standing in for the
// test-time rounding.
struct CaeConfig {
  float lambda = 0.01f;
  float noise_width = 0.5f;
  int stages = 3;
  std::vector<int> stage_channels = {32, 64};  // widths of the non-final stages
  int latent_channels = 32;

  int stage_multiple() const { return 1 << stages; }
};

// One downsampling stage is a stride-2 conv (4x4) followed by a stride-1 conv
// (3x3), PReLU throughout; the decoder mirrors with conv/conv_transpose pairs
// and a linear final layer. One single-channel network is shared by all
// planes.
template <typename T>
struct CaeModel {
  CaeConfig config;
  std::vector<Conv2dLayer<T>> enc_conv;
  std::vector<PreluLayer<T>> enc_act;
  std::vector<Conv2dLayer<T>> dec_conv;
  std::vector<ConvTranspose2dLayer<T>> dec_deconv;
  std::vector<PreluLayer<T>> dec_act;

  static CaeModel make(const CaeConfig& cfg, uint64_t seed) {
    if (cfg.stages < 1 || cfg.stages > 6)
      fail(ErrorKind::kDimension, "cae: stages must be in [1,6]");
    if (static_cast<int>(cfg.stage_channels.size()) != cfg.stages - 1)
      fail(ErrorKind::kDimension, "cae: need one stage width per non-final stage");
    CaeModel m;
    m.config = cfg;
    std::mt19937_64 rng(seed);

    int cin = 1;
    for (int s = 0; s < cfg.stages; ++s) {
      int cout = s + 1 < cfg.stages ? cfg.stage_channels[s] : cfg.latent_channels;
      std::string base = "enc.s" + std::to_string(s);
      m.enc_conv.push_back(Conv2dLayer<T>::make(base + ".down", cin, cout, 4, 2, 1, rng));
      m.enc_act.push_back(PreluLayer<T>::make(base + ".down_act", cout));
      m.enc_conv.push_back(Conv2dLayer<T>::make(base + ".conv", cout, cout, 3, 1, 1, rng));
      m.enc_act.push_back(PreluLayer<T>::make(base + ".conv_act", cout));
      cin = cout;
    }
    for (int s = cfg.stages - 1; s >= 0; --s) {
      int cout = s > 0 ? cfg.stage_channels[s - 1] : 1;
      std::string base = "dec.s" + std::to_string(s);
      m.dec_conv.push_back(Conv2dLayer<T>::make(base + ".conv", cin, cin, 3, 1, 1, rng));
      m.dec_act.push_back(PreluLayer<T>::make(base + ".conv_act", cin));
      m.dec_deconv.push_back(ConvTranspose2dLayer<T>::make(base + ".up", cin, cout, 4, 2, 1, rng));
      if (s > 0) m.dec_act.push_back(PreluLayer<T>::make(base + ".up_act", cout));
      cin = cout;
    }
    return m;
  }

  NodePtr<T> encode(const NodePtr<T>& x) const {
    NodePtr<T> h = x;
    for (size_t i = 0; i < enc_conv.size(); ++i) h = enc_act[i](enc_conv[i](h));
    return h;
  }

  // Mirrors encode; final layer is linear (clamping happens at rendering).
  NodePtr<T> decode(const NodePtr<T>& y) const {
    NodePtr<T> h = y;
    size_t act = 0;
    for (size_t i = 0; i < dec_deconv.size(); ++i) {
      h = dec_act[act++](dec_conv[i](h));
      h = dec_deconv[i](h);
      if (i + 1 < dec_deconv.size()) h = dec_act[act++](h);
    }
    return h;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto& l : enc_conv) l.collect(out);
    for (auto& l : enc_act) l.collect(out);
    for (auto& l : dec_conv) l.collect(out);
    for (auto& l : dec_deconv) l.collect(out);
    for (auto& l : dec_act) l.collect(out);
    return out;
  }
};

// Eq-style rate-distortion loss; both terms are size-normalized means.
template <typename T>
NodePtr<T> cae_loss(const NodePtr<T>& x, const NodePtr<T>& x_hat, const NodePtr<T>& y, T lambda) {
  return add(mse(x, x_hat), scale(mean_all(square(y)), lambda));
}

// One training step: latent noise U(-noise_width, +noise_width) on the
// distortion path only, loss, backward, Adam on all params.
template <typename T>
T cae_train_step(CaeModel<T>& model, const Tensor<T>& batch, AdamOptimizer<T>& opt,
                 std::mt19937_64& rng) {
  const auto& cfg = model.config;
  if (batch.dim(2) % cfg.stage_multiple() != 0 || batch.dim(3) % cfg.stage_multiple() != 0)
    fail(ErrorKind::kDimension, "cae_train_step: batch dims must be divisible by " +
                                    std::to_string(cfg.stage_multiple()));
  auto x = constant(batch);
  auto y = model.encode(x);
  NodePtr<T> y_dist = y;
  if (cfg.noise_width > 0) {
    Tensor<T> noise = uniform_tensor<T>(y->value.shape, static_cast<T>(-cfg.noise_width),
                                        static_cast<T>(cfg.noise_width), rng);
    y_dist = add_const(y, noise);
  }
  auto x_hat = model.decode(y_dist);
  auto loss = cae_loss(x, x_hat, y, static_cast<T>(cfg.lambda));
  T value = loss->value.data[0];
  if (!std::isfinite(static_cast<double>(value)))
    fail(ErrorKind::kNumeric, "cae_train_step: non-finite loss");
  backward(loss);
  opt.step();
  return value;
}

namespace detail {

inline constexpr uint8_t kCaeNoPca = 0;
inline constexpr uint8_t kCaePca = 1;

// Replicate-pads a plane to a multiple of the stage factor.
inline std::vector<float> pad_plane(const std::vector<float>& plane, int w, int h, int pw,
                                    int ph) {
  std::vector<float> out(static_cast<size_t>(pw) * ph);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      out[static_cast<size_t>(y) * pw + x] =
          plane[static_cast<size_t>(std::min(y, h - 1)) * w + std::min(x, w - 1)];
  return out;
}

template <typename T>
FeatureBlock latent_of_plane(const CaeModel<T>& model, const std::vector<float>& plane, int pw,
                             int ph) {
  Tensor<T> x({1, 1, ph, pw});
  for (size_t i = 0; i < x.data.size(); ++i)
    x.data[i] = static_cast<T>(plane[i] / 255.0f);
  auto y = model.encode(constant(std::move(x)));
  FeatureBlock fb = FeatureBlock::make(y->value.dim(1), y->value.dim(2), y->value.dim(3));
  for (size_t i = 0; i < fb.values.size(); ++i)
    fb.values[i] = static_cast<float>(y->value.data[i]);
  return fb;
}

template <typename T>
std::vector<float> plane_from_latent(const CaeModel<T>& model, const FeatureBlock& fb, int pw,
                                     int ph) {
  Tensor<T> y({1, fb.channels, fb.h, fb.w});
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = static_cast<T>(fb.values[i]);
  auto x_hat = model.decode(constant(std::move(y)));
  if (x_hat->value.dim(2) != ph || x_hat->value.dim(3) != pw)
    fail(ErrorKind::kFormat, "cae: decoded geometry mismatch (checkpoint/stream disagree)");
  std::vector<float> plane(static_cast<size_t>(pw) * ph);
  for (size_t i = 0; i < plane.size(); ++i) {
    float v = static_cast<float>(x_hat->value.data[i]) * 255.0f;
    plane[i] = std::min(255.0f, std::max(0.0f, std::round(v)));
  }
  return plane;
}

inline PcaBasis identity_basis(int dim) {
  PcaBasis b;
  b.dim = dim;
  b.mean.assign(dim, 0.0f);
  b.basis.assign(static_cast<size_t>(dim) * dim, 0.0f);
  for (int i = 0; i < dim; ++i) b.basis[static_cast<size_t>(i) * dim + i] = 1.0f;
  b.eigenvalues.assign(dim, 0.0f);
  return b;
}

}  // namespace detail

// Container codec_id 0. Codec header: stages u8, latent_channels u16,
// pad_right u8, pad_bottom u8, plane count u8. Payload: per plane, the
// common coded-block meta (PCA always present) + coded_len u32 + coded bytes.
template <typename T>
Bitstream cae_encode(const Image& img, const CaeModel<T>& model, int bits,
                     Image* local_recon = nullptr) {
  check_bits(bits);
  const auto& cfg = model.config;
  if (img.depth != Depth::kU8) fail(ErrorKind::kDimension, "cae_encode: expects an 8-bit image");
  if (img.width > 0xFFFFFF || img.height > 0xFFFFFF)
    fail(ErrorKind::kDimension, "cae_encode: image dimensions overflow the header");

  Image src = img.colorspace == Colorspace::kRgb ? convert_colorspace(img, Colorspace::kYCbCr)
                                                 : img;
  const int mult = cfg.stage_multiple();
  const int pw = (img.width + mult - 1) / mult * mult;
  const int ph = (img.height + mult - 1) / mult * mult;

  ByteWriter header;
  write_container_prefix(header, {CodecId::kCae, static_cast<uint32_t>(img.width),
                                  static_cast<uint32_t>(img.height)});
  header.u8(static_cast<uint8_t>(cfg.stages));
  header.u16(static_cast<uint16_t>(cfg.latent_channels));
  header.u8(static_cast<uint8_t>(pw - img.width));
  header.u8(static_cast<uint8_t>(ph - img.height));
  header.u8(static_cast<uint8_t>(src.channels()));

  if (local_recon) {
    *local_recon = Image::make(img.width, img.height, src.channels(), src.colorspace);
    local_recon->colorspace = src.colorspace;
  }

  ByteWriter payload;
  for (int plane_i = 0; plane_i < src.channels(); ++plane_i) {
    auto padded = detail::pad_plane(src.planes[plane_i], img.width, img.height, pw, ph);
    FeatureBlock latent = detail::latent_of_plane(model, padded, pw, ph);

    // Per-image basis; degenerate blocks (too few locations) use identity.
    PcaBasis basis = latent.plane_size() > static_cast<size_t>(latent.channels)
                         ? pca_fit(latent)
                         : detail::identity_basis(latent.channels);
    FeatureBlock rotated = pca_apply(latent, basis, PcaDirection::kForward);
    auto [codes, qp] = quantize(rotated, bits);
    auto coded = range_encode(codes, 1u << bits);

    CodedBlockMeta meta;
    meta.qp = qp;
    meta.has_pca = true;
    meta.basis = basis;
    meta.symbol_count = static_cast<uint32_t>(codes.size());
    write_coded_block_meta(payload, meta);
    payload.u32(static_cast<uint32_t>(coded.size()));
    payload.raw(coded);

    if (local_recon) {
      FeatureBlock deq = dequantize(codes, qp, latent.h, latent.w);
      FeatureBlock unrot = pca_apply(deq, basis, PcaDirection::kInverse);
      auto plane = detail::plane_from_latent(model, unrot, pw, ph);
      // crop padding
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          local_recon->planes[plane_i][static_cast<size_t>(y) * img.width + x] =
              plane[static_cast<size_t>(y) * pw + x];
    }
  }

  if (local_recon && src.colorspace == Colorspace::kYCbCr)
    *local_recon = convert_colorspace(*local_recon, Colorspace::kRgb);

  ByteWriter out;
  out.raw(header.bytes());
  out.u32(static_cast<uint32_t>(payload.size()));
  out.raw(payload.bytes());
  return Bitstream{out.take()};
}

template <typename T>
Image cae_decode(const Bitstream& bs, const CaeModel<T>& model) {
  ByteReader r(bs.bytes);
  ContainerPrefix prefix = read_container_prefix(r);
  if (prefix.codec_id != CodecId::kCae)
    fail(ErrorKind::kFormat, "cae_decode: stream was produced by a different codec");
  int stages = r.u8();
  int latent_channels = r.u16();
  int pad_right = r.u8();
  int pad_bottom = r.u8();
  int plane_count = r.u8();
  if (stages != model.config.stages || latent_channels != model.config.latent_channels)
    fail(ErrorKind::kFormat, "cae_decode: model geometry does not match the stream header");
  if (plane_count != 1 && plane_count != 3)
    fail(ErrorKind::kFormat, "cae_decode: bad plane count");
  uint32_t payload_len = r.u32();
  if (payload_len != r.remaining())
    fail(ErrorKind::kFormat, "cae_decode: payload length mismatch");

  const int w = static_cast<int>(prefix.width), h = static_cast<int>(prefix.height);
  const int pw = w + pad_right, ph = h + pad_bottom;
  const int lh = ph / (1 << stages), lw = pw / (1 << stages);

  Image out = Image::make(w, h, plane_count,
                          plane_count == 3 ? Colorspace::kYCbCr : Colorspace::kGray);
  for (int plane_i = 0; plane_i < plane_count; ++plane_i) {
    CodedBlockMeta meta = read_coded_block_meta(r, /*has_pca=*/true);
    if (static_cast<int>(meta.qp.min.size()) != latent_channels)
      fail(ErrorKind::kFormat, "cae_decode: channel count mismatch in plane header");
    if (meta.symbol_count != static_cast<uint32_t>(latent_channels) * lh * lw)
      fail(ErrorKind::kFormat, "cae_decode: symbol count mismatch in plane header");
    uint32_t coded_len = r.u32();
    auto coded = r.raw(coded_len);
    auto codes = range_decode(coded, meta.symbol_count, 1u << meta.qp.bits);
    FeatureBlock deq = dequantize(codes, meta.qp, lh, lw);
    FeatureBlock unrot = pca_apply(deq, meta.basis, PcaDirection::kInverse);
    auto plane = detail::plane_from_latent(model, unrot, pw, ph);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.planes[plane_i][static_cast<size_t>(y) * w + x] =
            plane[static_cast<size_t>(y) * pw + x];
  }
  return plane_count == 3 ? convert_colorspace(out, Colorspace::kRgb) : out;
}

}  // namespace licomp
