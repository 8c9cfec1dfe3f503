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

#include <map>
#include <string>
#include <vector>

#include "licomp/adam.hpp"
#include "licomp/bytes.hpp"

namespace licomp {

// Model checkpoint container (.licw), little-endian:
//   magic "LICW" | version u8 | param count u32 |
//   per param: name_len u32, name bytes, rank u32, extents u32 each,
//              raw values as f32.
inline constexpr char kCheckpointMagic[4] = {'L', 'I', 'C', 'W'};
inline constexpr uint8_t kCheckpointVersion = 1;

template <typename T>
std::vector<uint8_t> serialize_params(const std::vector<Param<T>*>& params) {
  ByteWriter w;
  w.raw(reinterpret_cast<const uint8_t*>(kCheckpointMagic), 4);
  w.u8(kCheckpointVersion);
  w.u32(static_cast<uint32_t>(params.size()));
  for (const auto* p : params) {
    w.u32(static_cast<uint32_t>(p->name.size()));
    w.str(p->name);
    const Tensor<T>& t = p->node->value;
    w.u32(static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) w.u32(static_cast<uint32_t>(d));
    for (T v : t.data) w.f32(static_cast<float>(v));
  }
  return w.take();
}

inline std::map<std::string, Tensor<float>> parse_checkpoint(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  if (r.str(4) != std::string(kCheckpointMagic, 4))
    fail(ErrorKind::kFormat, "bad checkpoint magic (expected LICW)");
  uint8_t version = r.u8();
  if (version != kCheckpointVersion)
    fail(ErrorKind::kFormat, "unsupported checkpoint version " + std::to_string(version));
  uint32_t count = r.u32();
  std::map<std::string, Tensor<float>> out;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u32());
    uint32_t rank = r.u32();
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(r.u32());
    Tensor<float> t(shape);
    for (auto& v : t.data) v = r.f32();
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

template <typename T>
void save_checkpoint(const std::string& path, const std::vector<Param<T>*>& params) {
  write_file_bytes(path, serialize_params(params));
}

// Assigns stored tensors into the given params by name. Every param must be
// present with a matching shape.
template <typename T>
void load_checkpoint(const std::string& path, const std::vector<Param<T>*>& params) {
  auto stored = parse_checkpoint(read_file_bytes(path));
  for (auto* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end())
      fail(ErrorKind::kFormat, "checkpoint missing param " + p->name);
    if (it->second.shape != p->node->value.shape)
      fail(ErrorKind::kFormat, "checkpoint shape mismatch for " + p->name + ": stored " +
                                   shape_str(it->second.shape) + ", model " +
                                   shape_str(p->node->value.shape));
    p->node->value = it->second.template cast<T>();
  }
}

}  // namespace licomp
