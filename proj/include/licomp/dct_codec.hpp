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
#include <cmath>
#include <vector>

#include "licomp/bytes.hpp"
#include "licomp/image.hpp"
#include "licomp/range_coder.hpp"
#include "licomp/resample.hpp"

namespace licomp {

// Self-contained block-transform codec used as the hermetic inner codec of
// the super-resolution pipeline (and as a JPEG-style anchor): 8x8 DCT on
// YCbCr 4:2:0, quality-scaled quantization matrices, and JPEG-style
// DC-prediction / (run,size) tokens entropy-coded with the adaptive range
// coder. Stream layout (little-endian):
//   magic "LDC1" | width u32 | height u32 | quality u8 | plane count u8 |
//   per plane: coded_len u32 | coded bytes
namespace dct {

inline constexpr char kMagic[4] = {'L', 'D', 'C', '1'};

inline constexpr int kLumaQ[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

inline constexpr int kChromaQ[64] = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

inline constexpr int kZigzag[64] = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

// libjpeg quality scaling
inline std::array<int, 64> scaled_qtable(const int* base, int quality) {
  if (quality < 1 || quality > 100)
    fail(ErrorKind::kDimension, "dct codec: quality must be in [1,100]");
  int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> q{};
  for (int i = 0; i < 64; ++i) {
    int v = (base[i] * scale + 50) / 100;
    q[i] = std::min(255, std::max(1, v));
  }
  return q;
}

struct CosTable {
  double c[8][8];  // c[u][x] = C(u) * cos((2x+1) u pi / 16) / 2
  CosTable() {
    for (int u = 0; u < 8; ++u)
      for (int x = 0; x < 8; ++x)
        c[u][x] = (u == 0 ? std::sqrt(0.5) : 1.0) *
                  std::cos((2 * x + 1) * u * 3.14159265358979323846 / 16.0) / 2.0;
  }
};

inline const CosTable& cos_table() {
  static const CosTable t;
  return t;
}

inline void fdct8x8(const double* in, double* out) {
  const auto& t = cos_table();
  double tmp[64];
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0;
      for (int x = 0; x < 8; ++x) acc += in[y * 8 + x] * t.c[u][x];
      tmp[y * 8 + u] = acc;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double acc = 0;
      for (int y = 0; y < 8; ++y) acc += tmp[y * 8 + u] * t.c[v][y];
      out[v * 8 + u] = acc;
    }
}

inline void idct8x8(const double* in, double* out) {
  const auto& t = cos_table();
  double tmp[64];
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double acc = 0;
      for (int u = 0; u < 8; ++u) acc += in[v * 8 + u] * t.c[u][x];
      tmp[v * 8 + x] = acc;
    }
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      double acc = 0;
      for (int v = 0; v < 8; ++v) acc += tmp[v * 8 + x] * t.c[v][y];
      out[y * 8 + x] = acc;
    }
}

inline int bit_length(int v) {
  int n = 0;
  while (v) {
    ++n;
    v >>= 1;
  }
  return n;
}

// Entropy layer: one range coder per plane with adaptive models for DC
// categories and AC (run,size) tokens; sign and magnitude-offset bits go
// through a fixed half/half bypass.
class PlaneEncoder {
 public:
  PlaneEncoder() : dc_cat_(16), ac_token_(256) {}

  void put_symbol(AdaptiveModel& m, uint32_t s) {
    rc_.encode(m.cum(s), m.freq(s), m.total());
    m.update(s);
  }
  void put_bit(uint32_t bit) { rc_.encode(bit, 1, 2); }
  void put_value_bits(int v) {  // v != 0; emits sign + offset within category
    int mag = std::abs(v), size = bit_length(mag);
    put_bit(v < 0 ? 1 : 0);
    for (int i = size - 2; i >= 0; --i) put_bit((mag >> i) & 1);
  }

  void encode_block(const int* zz, int& dc_pred) {
    int diff = zz[0] - dc_pred;
    dc_pred = zz[0];
    int cat = bit_length(std::abs(diff));
    put_symbol(dc_cat_, static_cast<uint32_t>(cat));
    if (cat > 0) put_value_bits(diff);

    int last = 63;
    while (last > 0 && zz[last] == 0) --last;
    int run = 0;
    for (int i = 1; i <= last; ++i) {
      if (zz[i] == 0) {
        ++run;
        if (run == 16) {
          put_symbol(ac_token_, 0xF0);  // ZRL
          run = 0;
        }
        continue;
      }
      int size = bit_length(std::abs(zz[i]));
      put_symbol(ac_token_, static_cast<uint32_t>((run << 4) | size));
      put_value_bits(zz[i]);
      run = 0;
    }
    if (last < 63) put_symbol(ac_token_, 0x00);  // EOB
  }

  std::vector<uint8_t> finish() { return rc_.finish(); }

 private:
  RangeEncoder rc_;
  AdaptiveModel dc_cat_;
  AdaptiveModel ac_token_;
};

class PlaneDecoder {
 public:
  PlaneDecoder(const uint8_t* bytes, size_t size)
      : rc_(bytes, size), dc_cat_(16), ac_token_(256) {}

  uint32_t get_symbol(AdaptiveModel& m) {
    uint32_t s = m.find(rc_.decode_target(m.total()));
    rc_.update(m.cum(s), m.freq(s));
    m.update(s);
    return s;
  }
  uint32_t get_bit() {
    uint32_t t = rc_.decode_target(2);
    rc_.update(t, 1);
    return t;
  }
  int get_value(int size) {
    int sign = get_bit() ? -1 : 1;
    int mag = 1;
    for (int i = 0; i < size - 1; ++i) mag = (mag << 1) | static_cast<int>(get_bit());
    return sign * mag;
  }

  void decode_block(int* zz, int& dc_pred) {
    std::fill(zz, zz + 64, 0);
    int cat = static_cast<int>(get_symbol(dc_cat_));
    int diff = cat > 0 ? get_value(cat) : 0;
    dc_pred += diff;
    zz[0] = dc_pred;
    int i = 1;
    while (i <= 63) {
      uint32_t token = get_symbol(ac_token_);
      if (token == 0x00) break;  // EOB
      if (token == 0xF0) {
        i += 16;
        continue;
      }
      int run = static_cast<int>(token >> 4);
      int size = static_cast<int>(token & 0xF);
      i += run;
      if (i > 63 || size == 0)
        fail(ErrorKind::kFormat, "dct codec: corrupt coefficient token");
      zz[i++] = get_value(size);
    }
  }

 private:
  RangeDecoder rc_;
  AdaptiveModel dc_cat_;
  AdaptiveModel ac_token_;
};

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<float> samples;
};

inline Plane pad_to_blocks(const Plane& p) {
  int pw = (p.w + 7) / 8 * 8, ph = (p.h + 7) / 8 * 8;
  if (pw == p.w && ph == p.h) return p;
  Plane out{pw, ph, std::vector<float>(static_cast<size_t>(pw) * ph)};
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      out.samples[static_cast<size_t>(y) * pw + x] =
          p.samples[static_cast<size_t>(std::min(y, p.h - 1)) * p.w + std::min(x, p.w - 1)];
  return out;
}

inline std::vector<uint8_t> encode_plane(const Plane& plane, const std::array<int, 64>& qtable) {
  Plane p = pad_to_blocks(plane);
  PlaneEncoder enc;
  int dc_pred = 0;
  double block[64], coef[64];
  int zz[64];
  for (int by = 0; by < p.h; by += 8)
    for (int bx = 0; bx < p.w; bx += 8) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          block[y * 8 + x] = p.samples[static_cast<size_t>(by + y) * p.w + bx + x] - 128.0;
      fdct8x8(block, coef);
      for (int i = 0; i < 64; ++i)
        zz[i] = static_cast<int>(std::lround(coef[kZigzag[i]] / qtable[kZigzag[i]]));
      enc.encode_block(zz, dc_pred);
    }
  return enc.finish();
}

inline Plane decode_plane(const uint8_t* bytes, size_t size, int w, int h,
                          const std::array<int, 64>& qtable) {
  int pw = (w + 7) / 8 * 8, ph = (h + 7) / 8 * 8;
  Plane padded{pw, ph, std::vector<float>(static_cast<size_t>(pw) * ph)};
  PlaneDecoder dec(bytes, size);
  int dc_pred = 0;
  int zz[64];
  double coef[64], block[64];
  for (int by = 0; by < ph; by += 8)
    for (int bx = 0; bx < pw; bx += 8) {
      dec.decode_block(zz, dc_pred);
      for (int i = 0; i < 64; ++i) coef[kZigzag[i]] = static_cast<double>(zz[i]) * qtable[kZigzag[i]];
      idct8x8(coef, block);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          padded.samples[static_cast<size_t>(by + y) * pw + bx + x] =
              static_cast<float>(std::min(255.0, std::max(0.0, std::round(block[y * 8 + x] + 128.0))));
    }
  if (pw == w && ph == h) return padded;
  Plane out{w, h, std::vector<float>(static_cast<size_t>(w) * h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.samples[static_cast<size_t>(y) * w + x] = padded.samples[static_cast<size_t>(y) * pw + x];
  return out;
}

inline Image plane_as_image(const Plane& p) {
  Image img = Image::make(p.w, p.h, 1, Colorspace::kGray);
  img.planes[0] = p.samples;
  return img;
}

}  // namespace dct

inline std::vector<uint8_t> dct_codec_encode(const Image& img, int quality) {
  if (img.depth != Depth::kU8)
    fail(ErrorKind::kDimension, "dct codec: expects an 8-bit image");
  auto lq = dct::scaled_qtable(dct::kLumaQ, quality);
  auto cq = dct::scaled_qtable(dct::kChromaQ, quality);

  std::vector<dct::Plane> planes;
  if (img.channels() == 3) {
    Image ycc = img.colorspace == Colorspace::kYCbCr ? img
                                                     : convert_colorspace(img, Colorspace::kYCbCr);
    planes.push_back({img.width, img.height, ycc.planes[0]});
    // 4:2:0 chroma, box-filtered
    int cw = (img.width + 1) / 2, ch = (img.height + 1) / 2;
    for (int c = 1; c < 3; ++c) {
      Image chroma = Image::make(img.width, img.height, 1, Colorspace::kGray);
      chroma.planes[0] = ycc.planes[c];
      Image down = resample_to(chroma, cw, ch, ResampleKernel::kBox);
      planes.push_back({cw, ch, down.planes[0]});
    }
  } else {
    planes.push_back({img.width, img.height, img.planes[0]});
  }

  ByteWriter w;
  w.raw(reinterpret_cast<const uint8_t*>(dct::kMagic), 4);
  w.u32(static_cast<uint32_t>(img.width));
  w.u32(static_cast<uint32_t>(img.height));
  w.u8(static_cast<uint8_t>(quality));
  w.u8(static_cast<uint8_t>(planes.size()));
  for (size_t i = 0; i < planes.size(); ++i) {
    auto coded = dct::encode_plane(planes[i], i == 0 ? lq : cq);
    w.u32(static_cast<uint32_t>(coded.size()));
    w.raw(coded);
  }
  return w.take();
}

inline Image dct_codec_decode(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  if (r.str(4) != std::string(dct::kMagic, 4))
    fail(ErrorKind::kFormat, "dct codec: bad magic");
  int w = static_cast<int>(r.u32());
  int h = static_cast<int>(r.u32());
  int quality = r.u8();
  int plane_count = r.u8();
  if (w <= 0 || h <= 0 || (plane_count != 1 && plane_count != 3))
    fail(ErrorKind::kFormat, "dct codec: corrupt header");
  auto lq = dct::scaled_qtable(dct::kLumaQ, quality);
  auto cq = dct::scaled_qtable(dct::kChromaQ, quality);

  std::vector<dct::Plane> planes;
  for (int i = 0; i < plane_count; ++i) {
    int pw = i == 0 ? w : (w + 1) / 2;
    int ph = i == 0 ? h : (h + 1) / 2;
    uint32_t len = r.u32();
    auto coded = r.raw(len);
    planes.push_back(dct::decode_plane(coded.data(), coded.size(), pw, ph, i == 0 ? lq : cq));
  }

  if (plane_count == 1) {
    Image out = Image::make(w, h, 1, Colorspace::kGray);
    out.planes[0] = std::move(planes[0].samples);
    return out;
  }
  Image ycc = Image::make(w, h, 3, Colorspace::kYCbCr);
  ycc.planes[0] = std::move(planes[0].samples);
  for (int c = 1; c < 3; ++c) {
    Image up = resample_to(dct::plane_as_image(planes[c]), w, h, ResampleKernel::kBicubic);
    ycc.planes[c] = std::move(up.planes[0]);
  }
  return convert_colorspace(ycc, Colorspace::kRgb);
}

}  // namespace licomp
