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

#include "licomp/bytes.hpp"
#include "licomp/pca.hpp"
#include "licomp/quantize.hpp"

namespace licomp {

// Bitstream container (.lic), little-endian:
//   magic "LIC1" | codec_id u8 | width u32 | height u32 |
//   codec-specific header | payload_len u32 | payload
// Streams are self-describing: decoding needs nothing beyond the stream and
// the model checkpoint.
inline constexpr char kStreamMagic[4] = {'L', 'I', 'C', '1'};

enum class CodecId : uint8_t { kCae = 0, kGan = 1, kSr = 2 };

struct Bitstream {
  std::vector<uint8_t> bytes;

  size_t size_bytes() const { return bytes.size(); }
  size_t size_bits() const { return bytes.size() * 8; }
};

struct ContainerPrefix {
  CodecId codec_id = CodecId::kCae;
  uint32_t width = 0;
  uint32_t height = 0;
};

inline void write_container_prefix(ByteWriter& w, const ContainerPrefix& p) {
  w.raw(reinterpret_cast<const uint8_t*>(kStreamMagic), 4);
  w.u8(static_cast<uint8_t>(p.codec_id));
  w.u32(p.width);
  w.u32(p.height);
}

inline ContainerPrefix read_container_prefix(ByteReader& r) {
  if (r.str(4) != std::string(kStreamMagic, 4))
    fail(ErrorKind::kFormat, "bad stream magic (expected LIC1)");
  ContainerPrefix p;
  uint8_t id = r.u8();
  if (id > 2) fail(ErrorKind::kFormat, "unknown codec id " + std::to_string(id));
  p.codec_id = static_cast<CodecId>(id);
  p.width = r.u32();
  p.height = r.u32();
  if (p.width == 0 || p.height == 0) fail(ErrorKind::kFormat, "zero image dimension in header");
  return p;
}

// Shared CAE/GAN coded-plane metadata: bits u8, channels u16, per-channel
// min/step f32 pairs, optional PCA mean (C f32) + basis (C^2 f32), then
// symbol_count u32.
struct CodedBlockMeta {
  QuantParams qp;
  bool has_pca = false;
  PcaBasis basis;
  uint32_t symbol_count = 0;
};

inline void write_coded_block_meta(ByteWriter& w, const CodedBlockMeta& m) {
  const int channels = static_cast<int>(m.qp.min.size());
  w.u8(static_cast<uint8_t>(m.qp.bits));
  w.u16(static_cast<uint16_t>(channels));
  for (int c = 0; c < channels; ++c) {
    w.f32(m.qp.min[c]);
    w.f32(m.qp.step[c]);
  }
  if (m.has_pca) {
    for (float v : m.basis.mean) w.f32(v);
    for (float v : m.basis.basis) w.f32(v);
  }
  w.u32(m.symbol_count);
}

inline CodedBlockMeta read_coded_block_meta(ByteReader& r, bool has_pca) {
  CodedBlockMeta m;
  m.qp.bits = r.u8();
  check_bits(m.qp.bits);
  int channels = r.u16();
  if (channels == 0) fail(ErrorKind::kFormat, "coded block with zero channels");
  m.qp.min.resize(channels);
  m.qp.step.resize(channels);
  for (int c = 0; c < channels; ++c) {
    m.qp.min[c] = r.f32();
    m.qp.step[c] = r.f32();
    if (!(m.qp.step[c] > 0)) fail(ErrorKind::kFormat, "non-positive quantizer step");
  }
  m.has_pca = has_pca;
  if (has_pca) {
    m.basis.dim = channels;
    m.basis.mean.resize(channels);
    m.basis.basis.resize(static_cast<size_t>(channels) * channels);
    m.basis.eigenvalues.assign(channels, 0.0f);
    for (auto& v : m.basis.mean) v = r.f32();
    for (auto& v : m.basis.basis) v = r.f32();
  }
  m.symbol_count = r.u32();
  return m;
}

}  // namespace licomp
