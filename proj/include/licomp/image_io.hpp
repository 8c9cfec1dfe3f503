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

#include <png.h>

#include <cctype>
#include <cstdio>
#include <string>
#include <vector>

#include "licomp/bytes.hpp"
#include "licomp/image.hpp"

namespace licomp {

namespace detail {

// Parses one whitespace-delimited ASCII integer of a PNM header, honoring
// '#' comments. Returns the value and advances `pos`.
inline int pnm_int(const std::vector<uint8_t>& b, size_t& pos, const std::string& path) {
  while (pos < b.size()) {
    if (std::isspace(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= b.size() || !std::isdigit(b[pos]))
    fail(ErrorKind::kFormat, path + ": malformed PNM header at byte offset " +
                                 std::to_string(pos));
  int v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) v = v * 10 + (b[pos++] - '0');
  return v;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline Image load_pnm(const std::string& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    fail(ErrorKind::kFormat, path + ": not a binary PPM (P6) or PGM (P5) file");
  const int channels = bytes[1] == '6' ? 3 : 1;
  size_t pos = 2;
  int w = pnm_int(bytes, pos, path);
  int h = pnm_int(bytes, pos, path);
  int maxval = pnm_int(bytes, pos, path);
  if (w <= 0 || h <= 0) fail(ErrorKind::kFormat, path + ": bad dimensions");
  if (maxval != 255) fail(ErrorKind::kFormat, path + ": only maxval 255 is supported");
  ++pos;  // single whitespace after maxval
  size_t expected = static_cast<size_t>(w) * h * channels;
  if (bytes.size() - pos < expected)
    fail(ErrorKind::kFormat, path + ": truncated payload, expected " + std::to_string(expected) +
                                 " bytes, got " + std::to_string(bytes.size() - pos));
  Image img = Image::make(w, h, channels,
                          channels == 3 ? Colorspace::kRgb : Colorspace::kGray);
  for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i)
    for (int c = 0; c < channels; ++c)
      img.planes[c][i] = static_cast<float>(bytes[pos + i * channels + c]);
  return img;
}

inline Image load_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    fail(ErrorKind::kFormat, path + ": " + png.message);
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0 &&
                    (png.format & PNG_FORMAT_FLAG_COLORMAP) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    fail(ErrorKind::kFormat, path + ": " + msg);
  }
  Image img = Image::make(static_cast<int>(png.width), static_cast<int>(png.height), channels,
                          gray ? Colorspace::kGray : Colorspace::kRgb);
  for (size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < channels; ++c)
      img.planes[c][i] = static_cast<float>(buf[i * channels + c]);
  return img;
}

}  // namespace detail

inline Image load_image(const std::string& path) {
  auto head = std::ifstream(path, std::ios::binary);
  if (!head) fail(ErrorKind::kIo, "cannot open " + path);
  char sig[2] = {0, 0};
  head.read(sig, 2);
  head.close();
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return detail::load_pnm(path);
  if (static_cast<unsigned char>(sig[0]) == 0x89 && sig[1] == 'P') return detail::load_png(path);
  fail(ErrorKind::kFormat, path + ": unsupported image format (PNG, PPM P6 or PGM P5)");
}

// Writes PPM/PGM (by channel count) or PNG when the path ends in .png.
// 8-bit only; PPM/PGM round-trips losslessly through load_image.
inline void save_image(const Image& img, const std::string& path) {
  if (img.depth != Depth::kU8)
    fail(ErrorKind::kDimension, "save_image: only 8-bit images can be saved");
  int channels = img.channels();
  if (channels != 1 && channels != 3)
    fail(ErrorKind::kDimension, "save_image: expected 1 or 3 planes");
  std::vector<uint8_t> interleaved(img.pixel_count() * channels);
  for (size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < channels; ++c) {
      float v = img.planes[c][i];
      interleaved[i * channels + c] =
          static_cast<uint8_t>(std::min(255.0f, std::max(0.0f, std::round(v))));
    }

  if (detail::ends_with(path, ".png")) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.c_str(), 0, interleaved.data(), 0, nullptr))
      fail(ErrorKind::kIo, path + ": " + png.message);
    return;
  }

  ByteWriter w;
  std::string header = std::string(channels == 3 ? "P6" : "P5") + "\n" +
                       std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  w.str(header);
  w.raw(interleaved);
  write_file_bytes(path, w.bytes());
}

}  // namespace licomp
