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

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "licomp/feature.hpp"

namespace licomp {

// Per-channel uniform quantizer parameters. step has a 1e-9 floor so constant
// channels stay decodable.
struct QuantParams {
  int bits = 8;
  std::vector<float> min;   // per channel
  std::vector<float> step;  // per channel, > 0

  uint32_t levels() const { return 1u << bits; }
};

inline void check_bits(int bits) {
  if (bits < 2 || bits > 16)
    fail(ErrorKind::kDimension, "quantizer bits must be in [2,16], got " + std::to_string(bits));
}

// Uniform mid-tread quantization: per channel, min = channel minimum,
// step = (max-min)/(2^bits-1), code = round((v-min)/step). Codes are emitted
// channel-major in the block's channel order.
inline std::pair<std::vector<uint32_t>, QuantParams> quantize(const FeatureBlock& fb, int bits) {
  check_bits(bits);
  QuantParams qp;
  qp.bits = bits;
  qp.min.resize(fb.channels);
  qp.step.resize(fb.channels);
  std::vector<uint32_t> codes(fb.size());
  const uint32_t top = qp.levels() - 1;
  for (int c = 0; c < fb.channels; ++c) {
    const float* p = fb.plane(c);
    float lo = p[0], hi = p[0];
    for (size_t i = 0; i < fb.plane_size(); ++i) {
      if (!std::isfinite(p[i])) fail(ErrorKind::kNumeric, "quantize: non-finite value");
      lo = std::min(lo, p[i]);
      hi = std::max(hi, p[i]);
    }
    float step = std::max(static_cast<float>((static_cast<double>(hi) - lo) / top), 1e-9f);
    qp.min[c] = lo;
    qp.step[c] = step;
    uint32_t* out = codes.data() + static_cast<size_t>(c) * fb.plane_size();
    for (size_t i = 0; i < fb.plane_size(); ++i) {
      double q = std::round((static_cast<double>(p[i]) - lo) / step);
      out[i] = static_cast<uint32_t>(std::min(static_cast<double>(top), std::max(0.0, q)));
    }
  }
  return {std::move(codes), std::move(qp)};
}

inline FeatureBlock dequantize(const std::vector<uint32_t>& codes, const QuantParams& qp, int h,
                               int w) {
  check_bits(qp.bits);
  const int channels = static_cast<int>(qp.min.size());
  if (codes.size() != static_cast<size_t>(channels) * h * w)
    fail(ErrorKind::kDimension, "dequantize: code count does not match block geometry");
  const uint32_t top = qp.levels() - 1;
  FeatureBlock fb = FeatureBlock::make(channels, h, w);
  for (int c = 0; c < channels; ++c) {
    const uint32_t* in = codes.data() + static_cast<size_t>(c) * fb.plane_size();
    float* out = fb.plane(c);
    for (size_t i = 0; i < fb.plane_size(); ++i) {
      if (in[i] > top)
        fail(ErrorKind::kFormat, "dequantize: code " + std::to_string(in[i]) +
                                     " exceeds 2^bits-1 (corrupt stream)");
      out[i] = static_cast<float>(static_cast<double>(qp.min[c]) +
                                  static_cast<double>(in[i]) * qp.step[c]);
    }
  }
  return fb;
}

}  // namespace licomp
