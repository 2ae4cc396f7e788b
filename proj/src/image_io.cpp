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

#include "image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "error.hpp"

namespace maskforge {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path,
                      const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

namespace {

bool is_png(const std::vector<std::uint8_t>& b) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G',
                                           0x0D, 0x0A, 0x1A, 0x0A};
  return b.size() >= 8 && std::memcmp(b.data(), kSig, 8) == 0;
}

// Decodes into the requested simplified-API format (RGB or GRAY).
std::vector<std::uint8_t> decode_png(const std::vector<std::uint8_t>& bytes,
                                     std::uint32_t format, int& width,
                                     int& height) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kUnreadableFile, "png: " + msg);
  }
  image.format = format;
  std::vector<std::uint8_t> out(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kUnreadableFile, "png: " + msg);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  png_image_free(&image);
  return out;
}

// Binary PPM (P6, maxval <= 255).
RasterImage decode_ppm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 2;
  auto next_int = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw Error(ErrorCode::kUnreadableFile, "ppm: malformed header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1L << 24)) {
        throw Error(ErrorCode::kUnreadableFile, "ppm: header value too large");
      }
      ++pos;
    }
    return v;
  };
  const long w = next_int();
  const long h = next_int();
  const long maxval = next_int();
  if (maxval <= 0 || maxval > 255) {
    throw Error(ErrorCode::kUnsupportedFormat, "ppm: only 8-bit P6 supported");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::kUnreadableFile, "ppm: malformed header");
  }
  ++pos;
  if (w <= 0 || h <= 0) {
    throw Error(ErrorCode::kUnreadableFile, "ppm: zero dimension");
  }
  const std::size_t need = 3 * static_cast<std::size_t>(w) * h;
  if (bytes.size() - pos < need) {
    throw Error(ErrorCode::kUnreadableFile, "ppm: truncated pixel data");
  }
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<long>(pos),
                                 bytes.begin() + static_cast<long>(pos + need));
  if (maxval != 255) {
    for (auto& v : data) v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return RasterImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

void write_png(const fs::path& path, const std::uint8_t* data, int width,
               int height, std::uint32_t format) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, data, 0,
                               nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kIoError, "png write " + path.string() + ": " + msg);
  }
  png_image_free(&image);
}

}  // namespace

RasterImage decode_image(const std::vector<std::uint8_t>& bytes) {
  RasterImage img;
  if (is_png(bytes)) {
    int w = 0, h = 0;
    auto rgb = decode_png(bytes, PNG_FORMAT_RGB, w, h);
    img = RasterImage(w, h, std::move(rgb));
  } else if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    img = decode_ppm(bytes);
  } else if (bytes.empty()) {
    throw Error(ErrorCode::kUnreadableFile, "empty file");
  } else {
    throw Error(ErrorCode::kUnsupportedFormat, "not a PNG or P6 raster");
  }
  if (img.width() < kMinImageSide || img.height() < kMinImageSide) {
    throw Error(ErrorCode::kImageTooSmall,
                std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  return img;
}

RasterImage load_image(const fs::path& path) {
  return decode_image(read_file_bytes(path));
}

BitMask load_mask(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  if (is_png(bytes)) {
    int w = 0, h = 0;
    auto gray = decode_png(bytes, PNG_FORMAT_GRAY, w, h);
    return BitMask(w, h, std::move(gray));
  }
  const RasterImage img = decode_image(bytes);
  BitMask m(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const Rgb c = img.at(x, y);
      m.set(x, y, c.r || c.g || c.b);
    }
  return m;
}

void save_png(const fs::path& path, const RasterImage& img) {
  write_png(path, img.data().data(), img.width(), img.height(), PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(),
                                 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kIoError, "png encode failed");
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0,
                                 img.data().data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kIoError, "png encode failed");
  }
  out.resize(size);
  png_image_free(&image);
  return out;
}

void save_ppm(const fs::path& path, const RasterImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), img.data().begin(), img.data().end());
  write_file_bytes(path, bytes);
}

void save_mask_png(const fs::path& path, const BitMask& mask) {
  std::vector<std::uint8_t> gray(mask.size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask[i] ? 255 : 0;
  write_png(path, gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

void export_partition(const fs::path& png_path, const fs::path& json_path,
                      const SuperpixelPartition& part) {
  if (part.region_count() > 65536) {
    throw Error(ErrorCode::kInvalidParameter,
                "label map exceeds 16-bit region ids");
  }
  std::vector<std::uint16_t> ids(part.labels().begin(), part.labels().end());
  write_png(png_path, reinterpret_cast<const std::uint8_t*>(ids.data()),
            part.width(), part.height(), PNG_FORMAT_LINEAR_Y);
  nlohmann::json sidecar;
  sidecar["regionCount"] = part.region_count();
  auto adjacency = nlohmann::json::array();
  for (const auto& [a, b] : part.adjacency_pairs()) adjacency.push_back({a, b});
  sidecar["adjacency"] = std::move(adjacency);
  const std::string text = sidecar.dump(2) + "\n";
  write_file_bytes(json_path, {text.begin(), text.end()});
}

}  // namespace maskforge
