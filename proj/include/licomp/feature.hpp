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

#include <cstdint>
#include <string>
#include <vector>

#include "licomp/common.hpp"

namespace licomp {

// Channel-major latent volume (y = f(x)); one plane of C*h*w floats.
struct FeatureBlock {
  int channels = 0;
  int h = 0;
  int w = 0;
  std::vector<float> values;  // [c][y][x]

  static FeatureBlock make(int channels, int h, int w) {
    FeatureBlock fb;
    fb.channels = channels;
    fb.h = h;
    fb.w = w;
    fb.values.assign(static_cast<size_t>(channels) * h * w, 0.0f);
    return fb;
  }

  size_t plane_size() const { return static_cast<size_t>(h) * w; }
  size_t size() const { return values.size(); }
  float* plane(int c) { return values.data() + static_cast<size_t>(c) * plane_size(); }
  const float* plane(int c) const {
    return values.data() + static_cast<size_t>(c) * plane_size();
  }
};

}  // namespace licomp
