// Copyright 2026 The maskforge Authors.
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

// Raster file I/O: PNG (8-bit RGB or gray) and binary PPM (P6).

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "imaging.hpp"

namespace maskforge {

inline constexpr int kMinImageSide = 16;

// Decodes a PNG or P6 file into 8-bit RGB.  Gray inputs are replicated
// across channels.  Throws UnreadableFile, UnsupportedFormat or
// ImageTooSmall.
RasterImage load_image(const std::filesystem::path& path);
RasterImage decode_image(const std::vector<std::uint8_t>& bytes);

// Any PNG/PPM; a pixel is set when its gray value is non-zero.
BitMask load_mask(const std::filesystem::path& path);

void save_png(const std::filesystem::path& path, const RasterImage& img);
std::vector<std::uint8_t> encode_png(const RasterImage& img);
void save_ppm(const std::filesystem::path& path, const RasterImage& img);

// 8-bit gray PNG, 0 = background, 255 = object.
void save_mask_png(const std::filesystem::path& path, const BitMask& mask);

// 16-bit gray PNG label map plus a JSON sidecar
// {regionCount, adjacency: [[a, b], ...]}.
void export_partition(const std::filesystem::path& png_path,
                      const std::filesystem::path& json_path,
                      const SuperpixelPartition& part);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes);

}  // namespace maskforge
