// Copyright 2026 The leafrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "leafrag/image.hpp"

#include <array>
#include <cstring>

namespace leafrag {
namespace {

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::uint32_t read_be16(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 8) | std::uint32_t{p[1]};
}

std::optional<ImageInfo> probe_png(const unsigned char* data, std::size_t size) {
  static constexpr std::array<unsigned char, 8> kSignature = {0x89, 'P', 'N', 'G',
                                                              '\r', '\n', 0x1a, '\n'};
  // signature, IHDR length + tag, width, height
  if (size < 24 || std::memcmp(data, kSignature.data(), kSignature.size()) != 0) {
    return std::nullopt;
  }
  if (std::memcmp(data + 12, "IHDR", 4) != 0) return std::nullopt;
  ImageInfo info{ImageFormat::kPng, read_be32(data + 16), read_be32(data + 20)};
  if (info.width == 0 || info.height == 0) return std::nullopt;
  return info;
}

bool is_sof_marker(unsigned char marker) {
  // SOF0..SOF15 except DHT (C4), JPG (C8) and DAC (CC)
  return marker >= 0xc0 && marker <= 0xcf && marker != 0xc4 && marker != 0xc8 &&
         marker != 0xcc;
}

std::optional<ImageInfo> probe_jpeg(const unsigned char* data, std::size_t size) {
  if (size < 4 || data[0] != 0xff || data[1] != 0xd8) return std::nullopt;
  std::size_t pos = 2;
  while (pos + 4 <= size) {
    if (data[pos] != 0xff) return std::nullopt;
    unsigned char marker = data[pos + 1];
    if (marker == 0xff) {  // fill byte
      ++pos;
      continue;
    }
    if (marker == 0xd9 || marker == 0xda) return std::nullopt;  // EOI/SOS before SOF
    if (marker == 0x01 || (marker >= 0xd0 && marker <= 0xd7)) {
      pos += 2;
      continue;
    }
    std::size_t segment = read_be16(data + pos + 2);
    if (segment < 2) return std::nullopt;
    if (is_sof_marker(marker)) {
      if (pos + 2 + segment > size || segment < 7) return std::nullopt;
      ImageInfo info{ImageFormat::kJpeg, read_be16(data + pos + 7), read_be16(data + pos + 5)};
      if (info.width == 0 || info.height == 0) return std::nullopt;
      return info;
    }
    pos += 2 + segment;
  }
  return std::nullopt;
}

}  // namespace

std::optional<ImageInfo> probe_image(std::string_view bytes) noexcept {
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (auto png = probe_png(data, bytes.size())) return png;
  return probe_jpeg(data, bytes.size());
}

}  // namespace leafrag
