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

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace leafrag {

enum class ImageFormat { kPng, kJpeg };

struct ImageInfo {
  ImageFormat format;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

/// Identifies a PNG or baseline/progressive JPEG by its header and reads the
/// pixel dimensions. Returns nullopt for anything else, including truncated
/// headers and zero-sized images.
std::optional<ImageInfo> probe_image(std::string_view bytes) noexcept;

}  // namespace leafrag
