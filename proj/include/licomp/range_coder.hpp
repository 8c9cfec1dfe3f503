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
#include <vector>

#include "licomp/common.hpp"

namespace licomp {

inline constexpr uint32_t kMaxAlphabet = 1u << 16;

// Byte-oriented range coder: 32-bit range, 64-bit low register. Carries are
// propagated deterministically through a cache byte plus a pending-0xFF run,
// so encoder output depends only on the symbol/interval sequence. The first
// output byte is the flushed initial cache (always zero); the decoder primes
// its code register with it. Streams carry no terminator — the caller stores
// the symbol count out of band (the bitstream container header).
class RangeEncoder {
 public:
  void encode(uint32_t cum, uint32_t freq, uint32_t total) {
    range_ /= total;
    low_ += static_cast<uint64_t>(cum) * range_;
    range_ *= freq;
    while (range_ < kTop) {
      shift_low();
      range_ <<= 8;
    }
  }

  std::vector<uint8_t> finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
  }

 private:
  static constexpr uint32_t kTop = 1u << 24;

  void shift_low() {
    if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      uint8_t carry = static_cast<uint8_t>(low_ >> 32);
      out_.push_back(static_cast<uint8_t>(cache_ + carry));
      while (pending_ != 0) {
        out_.push_back(static_cast<uint8_t>(0xFF + carry));
        --pending_;
      }
      cache_ = static_cast<uint8_t>(low_ >> 24);
    } else {
      ++pending_;
    }
    low_ = (low_ & 0x00FFFFFFu) << 8;
  }

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t pending_ = 0;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* bytes, size_t size) : bytes_(bytes), size_(size) {
    for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
  }

  // Scaled cumulative value of the next symbol; the caller maps it to a
  // symbol and confirms with update(). Clamped to total-1 so a desynced
  // stream yields garbage, never an out-of-range symbol.
  uint32_t decode_target(uint32_t total) {
    range_ /= total;
    uint32_t t = code_ / range_;
    return t < total ? t : total - 1;
  }

  void update(uint32_t cum, uint32_t freq) {
    code_ -= cum * range_;
    range_ *= freq;
    while (range_ < kTop) {
      code_ = (code_ << 8) | next_byte();
      range_ <<= 8;
    }
  }

 private:
  static constexpr uint32_t kTop = 1u << 24;

  uint8_t next_byte() {
    if (pos_ >= size_)
      fail(ErrorKind::kFormat, "range decoder: truncated input at byte " + std::to_string(pos_));
    return bytes_[pos_++];
  }

  const uint8_t* bytes_;
  size_t size_;
  size_t pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

// Adaptive order-0 frequency model over a Fenwick tree. All counts start at
// 1; a symbol's count grows by kIncrement on update, and all counts are
// halved (rounding up, so none hits zero) once the total exceeds the halving
// threshold. The threshold is 2^15, raised to 2*alphabet for alphabets above
// 2^14 where 2^15 would sit at or below the all-ones floor.
class AdaptiveModel {
 public:
  explicit AdaptiveModel(uint32_t alphabet_size) : counts_(alphabet_size, 1) {
    if (alphabet_size == 0 || alphabet_size > kMaxAlphabet)
      fail(ErrorKind::kDimension,
           "alphabet size must be in [1, 65536], got " + std::to_string(alphabet_size));
    threshold_ = std::max(1u << 15, 2 * alphabet_size);
    rebuild();
  }

  uint32_t size() const { return static_cast<uint32_t>(counts_.size()); }
  uint32_t total() const { return total_; }

  uint32_t freq(uint32_t symbol) const { return counts_[symbol]; }

  // Sum of counts of all symbols below `symbol`.
  uint32_t cum(uint32_t symbol) const {
    uint32_t s = 0;
    for (uint32_t i = symbol; i != 0; i -= i & (~i + 1)) s += tree_[i - 1];
    return s;
  }

  // Largest symbol whose cumulative count is <= target.
  uint32_t find(uint32_t target) const {
    uint32_t pos = 0;
    uint32_t remaining = target;
    for (uint32_t step = top_bit_; step != 0; step >>= 1) {
      uint32_t next = pos + step;
      if (next <= size() && tree_[next - 1] <= remaining) {
        remaining -= tree_[next - 1];
        pos = next;
      }
    }
    return pos < size() ? pos : size() - 1;
  }

  void update(uint32_t symbol) {
    add(symbol, kIncrement);
    total_ += kIncrement;
    if (total_ > threshold_) {
      for (auto& c : counts_) c = (c + 1) >> 1;
      rebuild();
    }
  }

 private:
  static constexpr uint32_t kIncrement = 32;

  void add(uint32_t symbol, uint32_t delta) {
    counts_[symbol] += delta;
    for (uint32_t i = symbol + 1; i <= size(); i += i & (~i + 1)) tree_[i - 1] += delta;
  }

  void rebuild() {
    tree_.assign(size(), 0);
    total_ = 0;
    for (uint32_t i = 0; i < size(); ++i) {
      tree_[i] += counts_[i];
      total_ += counts_[i];
      uint32_t j = (i + 1) + ((i + 1) & (~i));  // parent in Fenwick layout
      if (j <= size()) tree_[j - 1] += tree_[i];
    }
    top_bit_ = 1;
    while ((top_bit_ << 1) <= size()) top_bit_ <<= 1;
  }

  std::vector<uint32_t> counts_;
  std::vector<uint32_t> tree_;
  uint32_t total_ = 0;
  uint32_t threshold_ = 0;
  uint32_t top_bit_ = 1;
};

// Order-0 adaptive range coding of a symbol sequence. The output is
// self-terminating given the symbol count; decode must be called with the
// same alphabet size.
inline std::vector<uint8_t> range_encode(const std::vector<uint32_t>& symbols,
                                         uint32_t alphabet_size) {
  AdaptiveModel model(alphabet_size);
  RangeEncoder enc;
  for (uint32_t s : symbols) {
    if (s >= alphabet_size)
      fail(ErrorKind::kDimension, "range_encode: symbol " + std::to_string(s) +
                                      " outside alphabet of size " +
                                      std::to_string(alphabet_size));
    enc.encode(model.cum(s), model.freq(s), model.total());
    model.update(s);
  }
  return enc.finish();
}

inline std::vector<uint32_t> range_decode(const uint8_t* bytes, size_t size,
                                          size_t symbol_count, uint32_t alphabet_size) {
  AdaptiveModel model(alphabet_size);
  std::vector<uint32_t> out;
  out.reserve(symbol_count);
  if (symbol_count == 0) return out;
  RangeDecoder dec(bytes, size);
  for (size_t i = 0; i < symbol_count; ++i) {
    uint32_t target = dec.decode_target(model.total());
    uint32_t s = model.find(target);
    dec.update(model.cum(s), model.freq(s));
    model.update(s);
    out.push_back(s);
  }
  return out;
}

inline std::vector<uint32_t> range_decode(const std::vector<uint8_t>& bytes, size_t symbol_count,
                                          uint32_t alphabet_size) {
  return range_decode(bytes.data(), bytes.size(), symbol_count, alphabet_size);
}

}  // namespace licomp
