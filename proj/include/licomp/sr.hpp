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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "licomp/bitstream.hpp"
#include "licomp/dct_codec.hpp"
#include "licomp/image_io.hpp"
#include "licomp/metrics.hpp"
#include "licomp/resample.hpp"
#include "licomp/srcnn.hpp"

namespace licomp {

// Super-resolution-assisted codec: the encoder runs a reconstruction loop
// measuring the distortion caused by downsample/super-resolve alone
// (Pre_PSNR) and routes each image either through the 0.5-scale SRCNN path
// or the 0.7-scale lanczos path around a pluggable base codec.

enum class SrRoute : uint8_t { kLanczos = 0, kSrcnn = 1 };

struct AdaptiveConfig {
  double threshold_db = 33.0;
  double sr_scale = 0.5;
  double fallback_scale = 0.7;

  void validate() const {
    if (!(sr_scale > 0.0 && sr_scale < fallback_scale && fallback_scale <= 1.0))
      fail(ErrorKind::kDimension, "sr: need 0 < sr_scale < fallback_scale <= 1");
  }
};

enum class BaseCodecKind : uint8_t { kBuiltinDct = 0, kExternalBpg = 1 };

struct BaseCodecParams {
  BaseCodecKind kind = BaseCodecKind::kBuiltinDct;
  int qp = 80;  // builtin: DCT quality 1..100; external: BPG QP
};

struct RoutingDecision {
  SrRoute route = SrRoute::kLanczos;
  double pre_psnr = 0.0;
  int down_w = 0;
  int down_h = 0;
};

namespace detail {

inline Image luma_image(const Image& img) {
  if (img.channels() == 1) return img;
  Image y = Image::make(img.width, img.height, 1, Colorspace::kGray, img.depth);
  if (img.colorspace == Colorspace::kRgb) {
    Image ycc = convert_colorspace(img, Colorspace::kYCbCr);
    y.planes[0] = std::move(ycc.planes[0]);
  } else {
    y.planes[0] = img.planes[0];
  }
  return y;
}

inline Image unit_float(const Image& u8_plane) {
  Image out = u8_plane;
  out.depth = Depth::kF32;
  for (auto& plane : out.planes)
    for (auto& v : plane) v /= 255.0f;
  return out;
}

inline Image to_u8(const Image& f32_plane) {
  Image out = f32_plane;
  out.depth = Depth::kU8;
  for (auto& plane : out.planes)
    for (auto& v : plane) v = std::round(std::min(1.0f, std::max(0.0f, v)) * 255.0f);
  return out;
}

}  // namespace detail

// The SR-only reconstruction loop on the Y plane: lanczos down to sr_scale,
// bicubic back up, SRCNN. Base-codec distortion is deliberately excluded.
template <typename T>
RoutingDecision adaptive_route(const Image& img, const SrcnnModel<T>& model,
                               const AdaptiveConfig& cfg) {
  cfg.validate();
  if (img.width < 34 || img.height < 34)
    fail(ErrorKind::kDimension, "adaptive_route: image must be at least 34x34");

  Image y = detail::luma_image(img);
  Image down = resample(y, cfg.sr_scale, ResampleKernel::kLanczos3);
  Image up = resample_to(down, img.width, img.height, ResampleKernel::kBicubic);
  Image enhanced = detail::to_u8(srcnn_forward(detail::unit_float(up), model));

  RoutingDecision d;
  d.pre_psnr = psnr(y, enhanced);
  d.route = d.pre_psnr > cfg.threshold_db ? SrRoute::kSrcnn : SrRoute::kLanczos;
  double s = d.route == SrRoute::kSrcnn ? cfg.sr_scale : cfg.fallback_scale;
  d.down_w = std::max(1, static_cast<int>(std::lround(img.width * s)));
  d.down_h = std::max(1, static_cast<int>(std::lround(img.height * s)));
  return d;
}

namespace detail {

inline std::string find_bpg_binary(const char* name) {
  if (const char* dir = std::getenv("LICOMP_BPG_PATH")) {
    auto p = std::filesystem::path(dir) / name;
    if (std::filesystem::exists(p)) return p.string();
    fail(ErrorKind::kExternal, std::string("LICOMP_BPG_PATH is set but ") + p.string() +
                                   " does not exist");
  }
  std::string path_env = std::getenv("PATH") ? std::getenv("PATH") : "";
  size_t start = 0;
  while (start <= path_env.size()) {
    size_t end = path_env.find(':', start);
    std::string dir = path_env.substr(start, end == std::string::npos ? end : end - start);
    if (!dir.empty()) {
      auto p = std::filesystem::path(dir) / name;
      std::error_code ec;
      if (std::filesystem::exists(p, ec)) return p.string();
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  fail(ErrorKind::kExternal, std::string(name) +
                                 " not found (set LICOMP_BPG_PATH or install BPG tools)");
}

// Runs a command capturing combined output; throws with that output on a
// nonzero exit.
inline std::string run_tool(const std::string& cmd) {
  std::string full = cmd + " 2>&1";
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) fail(ErrorKind::kExternal, "failed to spawn: " + cmd);
  std::string output;
  char buf[512];
  while (size_t n = fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
  int status = pclose(pipe);
  if (status != 0)
    fail(ErrorKind::kExternal, "tool failed (" + cmd + "):\n" + output);
  return output;
}

// Temp workspace removed on scope exit, so failed tool runs leave no files.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 100; ++i) {
      auto candidate = base / ("licomp_bpg_" + std::to_string(std::random_device{}()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path = candidate;
        return;
      }
    }
    fail(ErrorKind::kIo, "could not create a temporary directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline std::vector<uint8_t> bpg_encode(const Image& img, int qp) {
  std::string enc = find_bpg_binary("bpgenc");
  TempDir tmp;
  auto in_png = (tmp.path / "in.png").string();
  auto out_bpg = (tmp.path / "out.bpg").string();
  save_image(img, in_png);
  run_tool(enc + " -q " + std::to_string(qp) + " -o " + out_bpg + " " + in_png);
  return read_file_bytes(out_bpg);
}

inline Image bpg_decode(const std::vector<uint8_t>& bytes) {
  std::string dec = find_bpg_binary("bpgdec");
  TempDir tmp;
  auto in_bpg = (tmp.path / "in.bpg").string();
  auto out_png = (tmp.path / "out.png").string();
  write_file_bytes(in_bpg, bytes);
  run_tool(dec + " -o " + out_png + " " + in_bpg);
  return load_image(out_png);
}

}  // namespace detail

inline std::vector<uint8_t> base_codec_encode(const Image& img, const BaseCodecParams& params) {
  switch (params.kind) {
    case BaseCodecKind::kBuiltinDct:
      return dct_codec_encode(img, params.qp);
    case BaseCodecKind::kExternalBpg:
      return detail::bpg_encode(img, params.qp);
  }
  fail(ErrorKind::kDimension, "unknown base codec kind");
}

inline Image base_codec_decode(const std::vector<uint8_t>& bytes, BaseCodecKind kind) {
  switch (kind) {
    case BaseCodecKind::kBuiltinDct:
      return dct_codec_decode(bytes);
    case BaseCodecKind::kExternalBpg:
      return detail::bpg_decode(bytes);
  }
  fail(ErrorKind::kFormat, "unknown base codec kind");
}

// Container codec_id 2. Codec header: route u8, orig_w u32, orig_h u32,
// base_kind u8, qp u8, inner_len u32, then the inner base-codec stream.
template <typename T>
Bitstream sr_encode(const Image& img, const SrcnnModel<T>& model, const AdaptiveConfig& cfg,
                    const BaseCodecParams& base) {
  RoutingDecision d = adaptive_route(img, model, cfg);
  Image down = resample_to(img, d.down_w, d.down_h, ResampleKernel::kLanczos3);
  auto inner = base_codec_encode(down, base);

  ByteWriter w;
  write_container_prefix(w, {CodecId::kSr, static_cast<uint32_t>(img.width),
                             static_cast<uint32_t>(img.height)});
  w.u8(static_cast<uint8_t>(d.route));
  w.u32(static_cast<uint32_t>(img.width));
  w.u32(static_cast<uint32_t>(img.height));
  w.u8(static_cast<uint8_t>(base.kind));
  w.u8(static_cast<uint8_t>(base.qp));
  w.u32(static_cast<uint32_t>(inner.size()));
  w.raw(inner);
  return Bitstream{w.take()};
}

// The lanczos route needs no network weights; pass a null model to decode
// such streams without any checkpoint.
template <typename T>
Image sr_decode(const Bitstream& bs, const SrcnnModel<T>* model) {
  ByteReader r(bs.bytes);
  ContainerPrefix prefix = read_container_prefix(r);
  if (prefix.codec_id != CodecId::kSr)
    fail(ErrorKind::kFormat, "sr_decode: stream was produced by a different codec");
  uint8_t route_raw = r.u8();
  if (route_raw > 1) fail(ErrorKind::kFormat, "sr_decode: invalid route flag");
  SrRoute route = static_cast<SrRoute>(route_raw);
  int orig_w = static_cast<int>(r.u32());
  int orig_h = static_cast<int>(r.u32());
  uint8_t kind_raw = r.u8();
  if (kind_raw > 1) fail(ErrorKind::kFormat, "sr_decode: unknown base codec id");
  BaseCodecKind kind = static_cast<BaseCodecKind>(kind_raw);
  r.u8();  // qp, informational for decode
  uint32_t inner_len = r.u32();
  Image small = base_codec_decode(r.raw(inner_len), kind);

  if (route == SrRoute::kLanczos)
    return resample_to(small, orig_w, orig_h, ResampleKernel::kLanczos3);

  if (!model)
    fail(ErrorKind::kUsage, "sr_decode: this stream took the SRCNN route and needs a checkpoint");

  if (small.channels() == 1) {
    Image up = resample_to(small, orig_w, orig_h, ResampleKernel::kBicubic);
    return detail::to_u8(srcnn_forward(detail::unit_float(up), *model));
  }
  Image ycc = convert_colorspace(small, Colorspace::kYCbCr);
  Image up = resample_to(ycc, orig_w, orig_h, ResampleKernel::kBicubic);
  Image y = Image::make(orig_w, orig_h, 1, Colorspace::kGray);
  y.planes[0] = up.planes[0];
  Image enhanced = detail::to_u8(srcnn_forward(detail::unit_float(y), *model));
  up.planes[0] = std::move(enhanced.planes[0]);
  return convert_colorspace(up, Colorspace::kRgb);
}

}  // namespace licomp
