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

#include "imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "error.hpp"

namespace maskforge {

void PixelRect::include(int x, int y) {
  if (empty()) {
    x0 = x1 = x;
    y0 = y1 = y;
    return;
  }
  x0 = std::min(x0, x);
  y0 = std::min(y0, y);
  x1 = std::max(x1, x);
  y1 = std::max(y1, y);
}

void PixelRect::include(const PixelRect& o) {
  if (o.empty()) return;
  include(o.x0, o.y0);
  include(o.x1, o.y1);
}

RasterImage::RasterImage(int width, int height)
    : RasterImage(width, height,
                  std::vector<std::uint8_t>(
                      3 * static_cast<std::size_t>(std::max(width, 0)) *
                      std::max(height, 0))) {}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidParameter, "raster dimensions must be > 0");
  }
  if (data_.size() != 3 * static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidParameter,
                "raster data length must equal width*height*3");
  }
}

BitMask::BitMask(int width, int height, bool value)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0),
            value ? 1 : 0) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidParameter, "mask dimensions must be > 0");
  }
}

BitMask::BitMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width <= 0 || height <= 0 ||
      bits_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidParameter, "mask size mismatch");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BitMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

PixelRect BitMask::bounding_box() const {
  PixelRect r;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (get(x, y)) r.include(x, y);
  return r;
}

// ---------------------------------------------------------------------------
// Partition

SuperpixelPartition SuperpixelPartition::from_labels(int width, int height,
                                                     std::vector<int> labels,
                                                     Scale scale) {
  if (width <= 0 || height <= 0 ||
      labels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidParameter,
                "label map size does not match dimensions");
  }
  SuperpixelPartition p;
  p.width_ = width;
  p.height_ = height;
  p.scale_ = scale;

  std::vector<int> remap;
  int next = 0;
  for (int& l : labels) {
    if (l < 0) throw Error(ErrorCode::kInvalidParameter, "negative label");
    if (static_cast<std::size_t>(l) >= remap.size()) remap.resize(l + 1, -1);
    if (remap[l] < 0) remap[l] = next++;
    l = remap[l];
  }
  p.labels_ = std::move(labels);
  p.stats_.assign(next, RegionStats{});
  std::vector<double> sx(next, 0.0);
  std::vector<double> sy(next, 0.0);
  std::vector<std::vector<int>> nb(next);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int l = p.labels_[static_cast<std::size_t>(y) * width + x];
      auto& s = p.stats_[l];
      ++s.pixel_count;
      s.bbox.include(x, y);
      sx[l] += x;
      sy[l] += y;
      if (x + 1 < width) {
        const int r = p.labels_[static_cast<std::size_t>(y) * width + x + 1];
        if (r != l) {
          nb[l].push_back(r);
          nb[r].push_back(l);
        }
      }
      if (y + 1 < height) {
        const int d = p.labels_[static_cast<std::size_t>(y + 1) * width + x];
        if (d != l) {
          nb[l].push_back(d);
          nb[d].push_back(l);
        }
      }
    }
  }
  for (int l = 0; l < next; ++l) {
    auto& s = p.stats_[l];
    s.centroid_x = sx[l] / static_cast<double>(s.pixel_count);
    s.centroid_y = sy[l] / static_cast<double>(s.pixel_count);
    std::sort(nb[l].begin(), nb[l].end());
    nb[l].erase(std::unique(nb[l].begin(), nb[l].end()), nb[l].end());
  }
  p.neighbors_ = std::move(nb);
  return p;
}

bool SuperpixelPartition::adjacent(int a, int b) const {
  if (!valid_region(a) || !valid_region(b)) return false;
  const auto& n = neighbors_[a];
  return std::binary_search(n.begin(), n.end(), b);
}

std::vector<std::pair<int, int>> SuperpixelPartition::adjacency_pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < region_count(); ++a)
    for (int b : neighbors_[a])
      if (a < b) out.emplace_back(a, b);
  return out;
}

BitMask SuperpixelPartition::region_mask(int region) const {
  if (!valid_region(region)) {
    throw Error(ErrorCode::kInvalidRegion, std::to_string(region));
  }
  BitMask m(width_, height_);
  auto bits = m.mutable_bits();
  for (std::size_t i = 0; i < labels_.size(); ++i)
    bits[i] = labels_[i] == region ? 1 : 0;
  return m;
}

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

// 4-connected components of pixels sharing the same key.  Returns the
// component id per pixel and the component count; ids follow raster order.
template <typename KeyFn>
std::pair<std::vector<int>, int> connected_components(int width, int height,
                                                      KeyFn key) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<int> comp(n, -1);
  std::vector<std::size_t> stack;
  int count = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const auto k = key(start);
    comp[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(i % width);
      const int y = static_cast<int>(i / width);
      const std::size_t cand[4] = {i - 1, i + 1, i - width, i + width};
      const bool ok[4] = {x > 0, x + 1 < width, y > 0, y + 1 < height};
      for (int d = 0; d < 4; ++d) {
        if (!ok[d]) continue;
        const std::size_t j = cand[d];
        if (comp[j] < 0 && key(j) == k) {
          comp[j] = count;
          stack.push_back(j);
        }
      }
    }
    ++count;
  }
  return {std::move(comp), count};
}

// Sorted, unique component-adjacency lists.
std::vector<std::vector<int>> component_adjacency(const std::vector<int>& comp,
                                                  int count, int width,
                                                  int height) {
  std::vector<std::vector<int>> adj(count);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width && comp[i] != comp[i + 1]) {
        adj[comp[i]].push_back(comp[i + 1]);
        adj[comp[i + 1]].push_back(comp[i]);
      }
      if (y + 1 < height && comp[i] != comp[i + width]) {
        adj[comp[i]].push_back(comp[i + width]);
        adj[comp[i + width]].push_back(comp[i]);
      }
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

double lab_f(double t) {
  constexpr double kEps = 216.0 / 24389.0;
  constexpr double kKappa = 24389.0 / 27.0;
  return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

}  // namespace

std::array<double, 3> rgb_to_lab(Rgb c) {
  const double r = srgb_to_linear(c.r / 255.0);
  const double g = srgb_to_linear(c.g / 255.0);
  const double b = srgb_to_linear(c.b / 255.0);
  // D65 white point.
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / 1.0;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const double fx = lab_f(x);
  const double fy = lab_f(y);
  const double fz = lab_f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

SuperpixelPartition segment_superpixels(const RasterImage& img,
                                        const SlicParams& params,
                                        Scale scale) {
  const int w = img.width();
  const int h = img.height();
  const long long n = static_cast<long long>(w) * h;
  if (params.target_regions < 2 || params.target_regions > n / 4) {
    throw Error(ErrorCode::kInvalidParameter,
                "targetRegions must lie in [2, width*height/4]");
  }
  if (!(params.compactness > 0.0) || params.iterations < 1) {
    throw Error(ErrorCode::kInvalidParameter,
                "compactness must be > 0 and iterations >= 1");
  }

  std::vector<std::array<double, 3>> lab(static_cast<std::size_t>(n));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      lab[static_cast<std::size_t>(y) * w + x] = rgb_to_lab(img.at(x, y));

  const int k = params.target_regions;
  const int nx = std::max(
      1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(k) * w / h))));
  const int ny = std::max(1, static_cast<int>(std::lround(
                                 static_cast<double>(k) / nx)));
  const double step_x = static_cast<double>(w) / nx;
  const double step_y = static_cast<double>(h) / ny;
  const int centers = nx * ny;
  const double s = std::sqrt(static_cast<double>(n) / centers);
  const double spatial = (params.compactness / s) * (params.compactness / s);

  struct Center {
    double l, a, b, x, y;
  };
  std::vector<Center> c;
  c.reserve(centers);
  std::mt19937_64 rng(params.seed);
  auto gradient = [&](int x, int y) {
    auto at = [&](int xx, int yy) -> const std::array<double, 3>& {
      xx = std::clamp(xx, 0, w - 1);
      yy = std::clamp(yy, 0, h - 1);
      return lab[static_cast<std::size_t>(yy) * w + xx];
    };
    double g = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const double dx = at(x + 1, y)[ch] - at(x - 1, y)[ch];
      const double dy = at(x, y + 1)[ch] - at(x, y - 1)[ch];
      g += dx * dx + dy * dy;
    }
    return g;
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double fx = (i + 0.5) * step_x;
      double fy = (j + 0.5) * step_y;
      if (params.seed != 0) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const double v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        fx += (u - 0.5) * 0.5 * step_x;
        fy += (v - 0.5) * 0.5 * step_y;
      }
      int cx = std::clamp(static_cast<int>(fx), 0, w - 1);
      int cy = std::clamp(static_cast<int>(fy), 0, h - 1);
      // Move off edges: lowest gradient in the 3x3 neighbourhood.
      double best = gradient(cx, cy);
      int bx = cx, by = cy;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = cx + dx, yy = cy + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          const double g = gradient(xx, yy);
          if (g < best) {
            best = g;
            bx = xx;
            by = yy;
          }
        }
      }
      const auto& p = lab[static_cast<std::size_t>(by) * w + bx];
      c.push_back({p[0], p[1], p[2], static_cast<double>(bx),
                   static_cast<double>(by)});
    }
  }

  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  const int win_x = static_cast<int>(std::ceil(step_x));
  const int win_y = static_cast<int>(std::ceil(step_y));
  auto distance = [&](const Center& cc, std::size_t i, int x, int y) {
    const auto& p = lab[i];
    const double dl = p[0] - cc.l, da = p[1] - cc.a, db = p[2] - cc.b;
    const double dx = x - cc.x, dy = y - cc.y;
    return dl * dl + da * da + db * db + spatial * (dx * dx + dy * dy);
  };
  for (int it = 0; it < params.iterations; ++it) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(label.begin(), label.end(), -1);
    for (int ci = 0; ci < centers; ++ci) {
      const Center& cc = c[ci];
      const int x0 = std::max(0, static_cast<int>(cc.x) - win_x);
      const int x1 = std::min(w - 1, static_cast<int>(cc.x) + win_x);
      const int y0 = std::max(0, static_cast<int>(cc.y) - win_y);
      const int y1 = std::min(h - 1, static_cast<int>(cc.y) + win_y);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double d = distance(cc, i, x, y);
          if (d < dist[i]) {
            dist[i] = d;
            label[i] = ci;
          }
        }
      }
    }
    // Pixels outside every window go to the globally nearest centre.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (label[i] >= 0) continue;
        for (int ci = 0; ci < centers; ++ci) {
          const double d = distance(c[ci], i, x, y);
          if (d < dist[i]) {
            dist[i] = d;
            label[i] = ci;
          }
        }
      }
    }
    std::vector<Center> sum(centers, Center{0, 0, 0, 0, 0});
    std::vector<long long> cnt(centers, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        auto& acc = sum[label[i]];
        acc.l += lab[i][0];
        acc.a += lab[i][1];
        acc.b += lab[i][2];
        acc.x += x;
        acc.y += y;
        ++cnt[label[i]];
      }
    }
    for (int ci = 0; ci < centers; ++ci) {
      if (cnt[ci] == 0) continue;
      const double inv = 1.0 / static_cast<double>(cnt[ci]);
      c[ci] = {sum[ci].l * inv, sum[ci].a * inv, sum[ci].b * inv,
               sum[ci].x * inv, sum[ci].y * inv};
    }
  }

  // Connectivity: the largest component of each cluster keeps it; every
  // other component is absorbed into its largest adjacent kept region.
  auto [comp, ncomp] = connected_components(
      w, h, [&](std::size_t i) { return label[i]; });
  std::vector<long long> size(ncomp, 0);
  std::vector<int> cluster_of(ncomp, -1);
  for (std::size_t i = 0; i < comp.size(); ++i) {
    ++size[comp[i]];
    cluster_of[comp[i]] = label[i];
  }
  std::vector<int> largest(centers, -1);
  for (int ci = 0; ci < ncomp; ++ci) {
    int& best = largest[cluster_of[ci]];
    if (best < 0 || size[ci] > size[best]) best = ci;
  }
  std::vector<char> kept(ncomp, 0);
  for (int ci = 0; ci < ncomp; ++ci) kept[ci] = largest[cluster_of[ci]] == ci;
  const auto adj = component_adjacency(comp, ncomp, w, h);
  DisjointSets sets(ncomp);
  bool pending = true;
  while (pending) {
    pending = false;
    bool progressed = false;
    for (int ci = 0; ci < ncomp; ++ci) {
      if (kept[ci] || sets.find(ci) != ci) continue;
      int target = -1;
      for (int nb : adj[ci]) {
        const int r = sets.find(nb);
        if (r == ci || !kept[r]) continue;
        if (target < 0 || size[r] > size[target] ||
            (size[r] == size[target] && r < target)) {
          target = r;
        }
      }
      if (target < 0) {
        pending = true;
        continue;
      }
      sets.parent[ci] = target;
      size[target] += size[ci];
      progressed = true;
    }
    if (pending && !progressed) {
      throw Error(ErrorCode::kPipelineFailure,
                  "connectivity enforcement did not converge");
    }
  }
  std::vector<int> out(comp.size());
  for (std::size_t i = 0; i < comp.size(); ++i) out[i] = sets.find(comp[i]);
  return SuperpixelPartition::from_labels(w, h, std::move(out), scale);
}

SuperpixelPartition refine_partition(const SuperpixelPartition& fine,
                                     const SuperpixelPartition& coarse,
                                     int min_region_pixels) {
  if (fine.width() != coarse.width() || fine.height() != coarse.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "fine and coarse partitions cover different dimensions");
  }
  const int w = fine.width();
  const int h = fine.height();
  const auto fl = fine.labels();
  const auto cl = coarse.labels();
  const long long stride = coarse.region_count();
  auto [comp, ncomp] = connected_components(w, h, [&](std::size_t i) {
    return static_cast<long long>(fl[i]) * stride + cl[i];
  });
  std::vector<long long> size(ncomp, 0);
  std::vector<int> parent_coarse(ncomp, 0);
  for (std::size_t i = 0; i < comp.size(); ++i) {
    ++size[comp[i]];
    parent_coarse[comp[i]] = cl[i];
  }
  const auto adj = component_adjacency(comp, ncomp, w, h);
  DisjointSets sets(ncomp);
  for (int ci = 0; ci < ncomp; ++ci) {
    if (sets.find(ci) != ci || size[ci] >= min_region_pixels) continue;
    int target = -1;
    for (int nb : adj[ci]) {
      const int r = sets.find(nb);
      if (r == ci || parent_coarse[r] != parent_coarse[ci]) continue;
      if (target < 0 || size[r] > size[target] ||
          (size[r] == size[target] && r < target)) {
        target = r;
      }
    }
    if (target < 0) continue;
    sets.parent[ci] = target;
    size[target] += size[ci];
  }
  std::vector<int> out(comp.size());
  for (std::size_t i = 0; i < comp.size(); ++i) out[i] = sets.find(comp[i]);
  return SuperpixelPartition::from_labels(w, h, std::move(out), Scale::kFine);
}

std::vector<int> parent_regions(const SuperpixelPartition& refined,
                                const SuperpixelPartition& coarse) {
  if (refined.width() != coarse.width() ||
      refined.height() != coarse.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "partition dimensions differ");
  }
  std::vector<int> parent(refined.region_count(), -1);
  const auto rl = refined.labels();
  const auto cl = coarse.labels();
  for (std::size_t i = 0; i < rl.size(); ++i)
    if (parent[rl[i]] < 0) parent[rl[i]] = cl[i];
  return parent;
}

ContextBox context_box(const SuperpixelPartition& part, int region,
                       int order) {
  if (!part.valid_region(region)) {
    throw Error(ErrorCode::kInvalidRegion,
                "region " + std::to_string(region) + " does not exist");
  }
  if (order < 1) {
    throw Error(ErrorCode::kInvalidParameter, "context order must be >= 1");
  }
  std::vector<int> depth(part.region_count(), -1);
  std::vector<int> frontier{region};
  depth[region] = 0;
  PixelRect rect = part.stats(region).bbox;
  for (int d = 1; d <= order && !frontier.empty(); ++d) {
    std::vector<int> next;
    for (int r : frontier) {
      for (int nb : part.neighbors(r)) {
        if (depth[nb] >= 0) continue;
        depth[nb] = d;
        rect.include(part.stats(nb).bbox);
        next.push_back(nb);
      }
    }
    frontier = std::move(next);
  }
  return {order, rect};
}

RasterImage crop_context(const RasterImage& img, const PixelRect& rect,
                         const BitMask* mask) {
  if (rect.empty() || !img.bounds().contains(rect)) {
    throw Error(ErrorCode::kInvalidParameter, "crop box outside image");
  }
  if (mask && (mask->width() != img.width() || mask->height() != img.height())) {
    throw Error(ErrorCode::kDimensionMismatch, "mask and image differ in size");
  }
  RasterImage out(rect.width(), rect.height());
  for (int y = rect.y0; y <= rect.y1; ++y) {
    for (int x = rect.x0; x <= rect.x1; ++x) {
      if (mask && !mask->get(x, y)) continue;
      out.set(x - rect.x0, y - rect.y0, img.at(x, y));
    }
  }
  return out;
}

std::vector<int> region_component_counts(const SuperpixelPartition& part) {
  const auto labels = part.labels();
  auto [comp, ncomp] = connected_components(
      part.width(), part.height(), [&](std::size_t i) { return labels[i]; });
  std::vector<int> counts(part.region_count(), 0);
  std::vector<char> seen(ncomp, 0);
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (seen[comp[i]]) continue;
    seen[comp[i]] = 1;
    ++counts[labels[i]];
  }
  return counts;
}

}  // namespace maskforge
