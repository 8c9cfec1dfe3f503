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
#include <functional>
#include <string>
#include <vector>

#include "licomp/bd_rate.hpp"
#include "licomp/bitstream.hpp"
#include "licomp/image.hpp"
#include "licomp/metrics.hpp"

namespace licomp {

// One codec configuration to be measured: an encode/decode closure pair.
struct SweepConfig {
  std::string codec;
  std::string note;
  std::function<Bitstream(const Image&)> encode;
  std::function<Image(const Bitstream&)> decode;
};

// Per config: mean bpp (total stream bits over total pixels, every container
// byte counted), per-image-averaged PSNR and MS-SSIM. A config whose encode
// fails on any image is skipped with a warning record.
inline RdCurve rd_sweep(const std::vector<Image>& corpus, const std::string& label,
                        const std::vector<SweepConfig>& configs,
                        std::vector<std::string>* warnings = nullptr) {
  if (corpus.empty()) fail(ErrorKind::kDimension, "rd_sweep: empty corpus");
  if (configs.empty()) fail(ErrorKind::kDimension, "rd_sweep: no configs");
  RdCurve curve;
  curve.label = label;
  for (const auto& cfg : configs) {
    double total_bits = 0.0, total_pixels = 0.0, psnr_sum = 0.0, ssim_sum = 0.0;
    bool failed = false;
    for (const auto& img : corpus) {
      try {
        Bitstream bs = cfg.encode(img);
        Image rec = cfg.decode(bs);
        total_bits += static_cast<double>(bs.size_bits());
        total_pixels += static_cast<double>(img.pixel_count());
        psnr_sum += psnr(img, rec);
        ssim_sum += ms_ssim(img, rec);
      } catch (const Error& e) {
        if (warnings)
          warnings->push_back("skipping config " + cfg.codec + "/" + cfg.note + ": " + e.what());
        failed = true;
        break;
      }
    }
    if (failed) continue;
    RdPoint p;
    p.bpp = total_bits / total_pixels;
    p.psnr = psnr_sum / static_cast<double>(corpus.size());
    p.ms_ssim = ssim_sum / static_cast<double>(corpus.size());
    p.codec = cfg.codec;
    p.note = cfg.note;
    curve.points.push_back(p);
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  return curve;
}

// CSV schema shared by `lic eval` and `lic compare`:
//   codec,config,bpp,psnr_db,ms_ssim
inline std::string rd_csv_header() { return "codec,config,bpp,psnr_db,ms_ssim\n"; }

inline std::string rd_csv_row(const RdPoint& p) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%.6g,%.6g,%.6g\n", p.codec.c_str(), p.note.c_str(),
                p.bpp, p.psnr, p.ms_ssim);
  return buf;
}

}  // namespace licomp
