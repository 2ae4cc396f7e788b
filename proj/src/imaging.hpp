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

// Pixel containers, superpixel partitions and multi-scale context boxes.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace maskforge {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Inclusive pixel rectangle.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  long long area() const {
    return empty() ? 0 : static_cast<long long>(width()) * height();
  }
  bool empty() const { return x1 < x0 || y1 < y0; }
  bool contains(const PixelRect& o) const {
    return o.x0 >= x0 && o.y0 >= y0 && o.x1 <= x1 && o.y1 <= y1;
  }
  void include(int x, int y);
  void include(const PixelRect& o);
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// 8-bit RGB raster, row-major, three bytes per pixel.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height);
  RasterImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> mutable_data() { return data_; }

  Rgb at(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width_ + x);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width_ + x);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }
  PixelRect bounds() const { return {0, 0, width_ - 1, height_ - 1}; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Per-pixel binary mask, one byte (0 or 1) per pixel.
class BitMask {
 public:
  BitMask() = default;
  BitMask(int width, int height, bool value = false);
  BitMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }
  bool get(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> mutable_bits() { return bits_; }

  std::size_t count() const;
  bool any() const { return count() > 0; }
  PixelRect bounding_box() const;

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class Scale { kCoarse, kFine };

struct RegionStats {
  long long pixel_count = 0;
  PixelRect bbox;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
};

// Label map whose regions are compact ids 0..R-1, numbered in raster order
// of first appearance.  Adjacency is 4-connected.
class SuperpixelPartition {
 public:
  SuperpixelPartition() = default;

  // Canonicalizes ids to first-appearance order.  Throws InvalidParameter
  // when the label count does not match the dimensions.
  static SuperpixelPartition from_labels(int width, int height,
                                         std::vector<int> labels, Scale scale);

  int width() const { return width_; }
  int height() const { return height_; }
  int region_count() const { return static_cast<int>(stats_.size()); }
  Scale scale() const { return scale_; }

  std::span<const int> labels() const { return labels_; }
  int label_at(int x, int y) const {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  const RegionStats& stats(int region) const { return stats_[region]; }
  // Sorted neighbour ids of a region.
  std::span<const int> neighbors(int region) const {
    return neighbors_[region];
  }
  bool adjacent(int a, int b) const;
  // Unordered pairs (a < b).
  std::vector<std::pair<int, int>> adjacency_pairs() const;
  BitMask region_mask(int region) const;
  bool valid_region(int region) const {
    return region >= 0 && region < region_count();
  }

  friend bool operator==(const SuperpixelPartition& a,
                         const SuperpixelPartition& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.scale_ == b.scale_ && a.labels_ == b.labels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  Scale scale_ = Scale::kCoarse;
  std::vector<int> labels_;
  std::vector<RegionStats> stats_;
  std::vector<std::vector<int>> neighbors_;
};

struct SlicParams {
  int target_regions = 100;
  double compactness = 10.0;
  int iterations = 10;
  // 0 places cluster centres on the regular grid; any other value jitters
  // them deterministically.
  std::uint64_t seed = 0;
};

std::array<double, 3> rgb_to_lab(Rgb c);

// SLIC-style k-means over (L, a, b, x/s, y/s) followed by connectivity
// enforcement.  Throws InvalidParameter on out-of-range parameters.
SuperpixelPartition segment_superpixels(const RasterImage& img,
                                        const SlicParams& params,
                                        Scale scale);

// Connected-component intersection of two partitions.  Pieces smaller than
// min_region_pixels are absorbed into their largest neighbour inside the
// same coarse region.
SuperpixelPartition refine_partition(const SuperpixelPartition& fine,
                                     const SuperpixelPartition& coarse,
                                     int min_region_pixels = 4);

// For each region of `refined`, the id of the `coarse` region containing
// its first pixel.
std::vector<int> parent_regions(const SuperpixelPartition& refined,
                                const SuperpixelPartition& coarse);

struct ContextBox {
  int order = 1;
  PixelRect rect;
};

// Tight box around the region and all neighbours reachable in `order`
// adjacency hops.
ContextBox context_box(const SuperpixelPartition& part, int region, int order);

// Sub-image of `img` inside `rect`; pixels outside `mask` (when given) are
// zeroed first.
RasterImage crop_context(const RasterImage& img, const PixelRect& rect,
                         const BitMask* mask = nullptr);

// Number of 4-connected components of each region (1 everywhere for a valid
// partition).  Used by validation and tests.
std::vector<int> region_component_counts(const SuperpixelPartition& part);

}  // namespace maskforge
