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
#include <filesystem>
#include <string>
#include <vector>

#include "licomp/image_io.hpp"
#include "licomp/tensor.hpp"

namespace licomp {

enum class CorpusSplit { kAll, kTrain, kValid };

// Image folder with a deterministic 90/10 train/valid split by filename
// hash; no manifest files.
struct Corpus {
  std::vector<std::string> paths;

  static uint64_t name_hash(const std::string& name) {
    uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : name) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  static Corpus from_dir(const std::string& dir, CorpusSplit split = CorpusSplit::kAll) {
    if (!std::filesystem::is_directory(dir))
      fail(ErrorKind::kIo, "corpus: " + dir + " is not a directory");
    Corpus c;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      if (ext != ".ppm" && ext != ".pgm" && ext != ".png") continue;
      bool valid_split = name_hash(entry.path().filename().string()) % 10 == 9;
      if (split == CorpusSplit::kTrain && valid_split) continue;
      if (split == CorpusSplit::kValid && !valid_split) continue;
      c.paths.push_back(entry.path().string());
    }
    std::sort(c.paths.begin(), c.paths.end());
    if (c.paths.empty())
      fail(ErrorKind::kIo, "corpus: no decodable images in " + dir + " for the requested split");
    return c;
  }

  std::vector<Image> load_all() const {
    std::vector<Image> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_image(p));
    return out;
  }
};

enum class PatchRange { kUnit, kSigned };  // [0,1] or [-1,1]

// Seeded uniform random crops. Luma patches come out [count,1,size,size];
// RGB patches [count,3,size,size]. Undersized images are skipped with a
// warning record; it is an error if nothing is large enough.
inline Tensor<float> sample_patches(const std::vector<Image>& images, int size, int count,
                                    uint64_t seed, PatchRange range, bool rgb = false,
                                    std::vector<std::string>* warnings = nullptr) {
  std::vector<const Image*> eligible;
  for (const auto& img : images) {
    if (img.width >= size && img.height >= size) {
      eligible.push_back(&img);
    } else if (warnings) {
      warnings->push_back("skipping undersized image " + std::to_string(img.width) + "x" +
                          std::to_string(img.height));
    }
  }
  const int channels = rgb ? 3 : 1;
  Tensor<float> batch({count, channels, size, size});
  if (count == 0) return batch;
  if (eligible.empty())
    fail(ErrorKind::kDimension, "sample_patches: no image is at least " + std::to_string(size) +
                                    "x" + std::to_string(size));

  std::mt19937_64 rng(seed);
  for (int n = 0; n < count; ++n) {
    const Image& img = *eligible[rng() % eligible.size()];
    std::uniform_int_distribution<int> dx(0, img.width - size), dy(0, img.height - size);
    int x0 = dx(rng), y0 = dy(rng);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        size_t src = static_cast<size_t>(y0 + y) * img.width + (x0 + x);
        if (rgb) {
          for (int c = 0; c < 3; ++c) {
            float v = img.channels() == 3 ? img.planes[c][src] : img.planes[0][src];
            batch.at(n, c, y, x) = range == PatchRange::kUnit ? v / 255.0f : v / 127.5f - 1.0f;
          }
        } else {
          float v;
          if (img.channels() == 3) {
            v = 0.299f * img.planes[0][src] + 0.587f * img.planes[1][src] +
                0.114f * img.planes[2][src];
          } else {
            v = img.planes[0][src];
          }
          batch.at(n, 0, y, x) = range == PatchRange::kUnit ? v / 255.0f : v / 127.5f - 1.0f;
        }
      }
  }
  return batch;
}

}  // namespace licomp
