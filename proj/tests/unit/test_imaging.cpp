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

#include <png.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <doctest.h>

#include "error.hpp"
#include "image_io.hpp"
#include "imaging.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace maskforge;

namespace {

RasterImage solid(int w, int h, Rgb c) {
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, c);
  return img;
}

SuperpixelPartition grid(int w, int h, int cell_w, int cell_h, Scale scale) {
  std::vector<int> labels(static_cast<std::size_t>(w) * h);
  const int cols = (w + cell_w - 1) / cell_w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) labels[y * w + x] = (y / cell_h) * cols + x / cell_w;
  return SuperpixelPartition::from_labels(w, h, std::move(labels), scale);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kPipelineFailure;
}

}  // namespace

TEST_SUITE("imaging") {

TEST_CASE("load_image reads a solid red png") {
  const auto dir = synth::fresh_dir("imaging_red");
  save_png(dir / "red.png", solid(64, 64, {255, 0, 0}));
  const auto img = load_image(dir / "red.png");
  CHECK(img.width() == 64);
  CHECK(img.height() == 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) REQUIRE(img.at(x, y) == Rgb{255, 0, 0});
}

TEST_CASE("load_image replicates grayscale channels") {
  const auto dir = synth::fresh_dir("imaging_gray");
  std::vector<std::uint8_t> gray(32 * 32);
  for (int i = 0; i < 32 * 32; ++i) gray[i] = static_cast<std::uint8_t>((i * 7) % 256);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 32;
  image.height = 32;
  image.format = PNG_FORMAT_GRAY;
  const auto path = (dir / "gray.png").string();
  REQUIRE(png_image_write_to_file(&image, path.c_str(), 0, gray.data(), 0, nullptr));
  const auto img = load_image(path);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      const auto v = gray[y * 32 + x];
      REQUIRE(img.at(x, y) == Rgb{v, v, v});
    }
  }
}

TEST_CASE("load_image rejects truncated and tiny files") {
  const auto dir = synth::fresh_dir("imaging_bad");
  auto bytes = encode_png(solid(32, 32, {1, 2, 3}));
  bytes.resize(bytes.size() / 2);
  write_file_bytes(dir / "cut.png", bytes);
  CHECK(code_of([&] { load_image(dir / "cut.png"); }) == ErrorCode::kUnreadableFile);
  save_png(dir / "tiny.png", solid(15, 40, {0, 0, 0}));
  CHECK(code_of([&] { load_image(dir / "tiny.png"); }) == ErrorCode::kImageTooSmall);
  write_file_bytes(dir / "junk.bin", {'h', 'e', 'l', 'l', 'o'});
  CHECK(code_of([&] { load_image(dir / "junk.bin"); }) == ErrorCode::kUnsupportedFormat);
  CHECK(code_of([&] { load_image(dir / "missing.png"); }) == ErrorCode::kUnreadableFile);
}

TEST_CASE("ppm round trip") {
  const auto dir = synth::fresh_dir("imaging_ppm");
  RasterImage img(17, 19);
  for (int y = 0; y < 19; ++y)
    for (int x = 0; x < 17; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(x * 9), static_cast<std::uint8_t>(y * 11), 77});
  save_ppm(dir / "a.ppm", img);
  CHECK(load_image(dir / "a.ppm") == img);
}

TEST_CASE("slic on uniform gray gives a regular grid") {
  const auto img = solid(60, 60, {128, 128, 128});
  const auto part = segment_superpixels(img, {9, 10.0, 10, 0}, Scale::kCoarse);
  REQUIRE(part.region_count() == 9);
  CHECK(oracle::partition_violations(part) == 0);
  double mean = 0.0;
  for (int r = 0; r < 9; ++r) mean += part.stats(r).pixel_count;
  mean /= 9;
  double var = 0.0;
  for (int r = 0; r < 9; ++r) var += std::pow(part.stats(r).pixel_count - mean, 2);
  CHECK(std::sqrt(var / 9) < 0.2 * mean);
  CHECK(mean == doctest::Approx(400));
}

TEST_CASE("slic follows a sharp vertical edge") {
  RasterImage img(60, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 60; ++x)
      img.set(x, y, x < 30 ? Rgb{230, 30, 30} : Rgb{20, 40, 220});
  const auto part = segment_superpixels(img, {2, 10.0, 10, 0}, Scale::kCoarse);
  CHECK(oracle::partition_violations(part) == 0);
  std::set<int> left, right;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 60; ++x) {
      if (x < 28) left.insert(part.label_at(x, y));
      if (x >= 32) right.insert(part.label_at(x, y));
    }
  }
  for (int l : left) CHECK(right.count(l) == 0);
}

TEST_CASE("slic parameter checks and determinism") {
  const auto img = solid(32, 32, {10, 20, 30});
  CHECK(code_of([&] { segment_superpixels(img, {1, 10.0, 10, 0}, Scale::kCoarse); }) ==
        ErrorCode::kInvalidParameter);
  CHECK(code_of([&] { segment_superpixels(img, {4, 0.0, 10, 0}, Scale::kCoarse); }) ==
        ErrorCode::kInvalidParameter);
  std::mt19937_64 rng(3);
  const auto scene = synth::make_scene(rng, {});
  for (std::uint64_t seed : {0ull, 5ull}) {
    const auto a = segment_superpixels(scene.image, {50, 10.0, 10, seed}, Scale::kCoarse);
    const auto b = segment_superpixels(scene.image, {50, 10.0, 10, seed}, Scale::kCoarse);
    CHECK(a == b);
    CHECK(a.region_count() >= 25);
    CHECK(a.region_count() <= 100);
    CHECK(oracle::partition_violations(a) == 0);
  }
}

TEST_CASE("refine_partition identities") {
  std::mt19937_64 rng(11);
  const auto scene = synth::make_scene(rng, {});
  const auto fine = segment_superpixels(scene.image, {200, 10.0, 10, 0}, Scale::kFine);
  const auto coarse = segment_superpixels(scene.image, {30, 10.0, 10, 0}, Scale::kCoarse);

  const auto fine_as_coarse = SuperpixelPartition::from_labels(
      96, 96, {fine.labels().begin(), fine.labels().end()}, Scale::kCoarse);
  const auto self = refine_partition(fine, fine_as_coarse);
  CHECK(std::vector<int>(self.labels().begin(), self.labels().end()) ==
        std::vector<int>(fine.labels().begin(), fine.labels().end()));

  const auto whole = SuperpixelPartition::from_labels(
      96, 96, std::vector<int>(96 * 96, 0), Scale::kCoarse);
  const auto same = refine_partition(fine, whole);
  CHECK(std::vector<int>(same.labels().begin(), same.labels().end()) ==
        std::vector<int>(fine.labels().begin(), fine.labels().end()));

  const auto refined = refine_partition(fine, coarse);
  CHECK(oracle::partition_violations(refined) == 0);
  CHECK(oracle::refinement_violations(refined, coarse, fine) == 0);
  const auto parents = parent_regions(refined, coarse);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x)
      REQUIRE(parents[refined.label_at(x, y)] == coarse.label_at(x, y));
}

TEST_CASE("refine_partition on a hand-built 4x4 case") {
  const auto coarse = grid(4, 4, 2, 2, Scale::kCoarse);
  // Fine bands of two rows line up with the coarse rows: 4 pieces.
  const auto bands = grid(4, 4, 4, 2, Scale::kFine);
  const auto r1 = refine_partition(bands, coarse, 1);
  CHECK(r1.region_count() == 4);
  CHECK(std::vector<int>(r1.labels().begin(), r1.labels().end()) ==
        std::vector<int>(coarse.labels().begin(), coarse.labels().end()));
  // Offset bands {0}, {1,2}, {3} cut every coarse cell in two: 8 pieces of
  // 2 pixels each.
  const auto offset = SuperpixelPartition::from_labels(
      4, 4, {0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2}, Scale::kFine);
  const auto r2 = refine_partition(offset, coarse, 1);
  CHECK(r2.region_count() == 8);
  for (int r = 0; r < 8; ++r) CHECK(r2.stats(r).pixel_count == 2);
  CHECK(r2.labels()[0] == r2.labels()[1]);
  CHECK(r2.labels()[1] != r2.labels()[2]);
  CHECK(r2.labels()[4] != r2.labels()[8]);
  // The default floor of 4 pixels merges the 2-pixel pieces within their
  // coarse cell, which restores the coarse grid.
  const auto r3 = refine_partition(offset, coarse);
  CHECK(r3.region_count() == 4);
}

TEST_CASE("context_box on grids") {
  const auto single = SuperpixelPartition::from_labels(
      20, 20, std::vector<int>(400, 0), Scale::kCoarse);
  CHECK(context_box(single, 0, 1).rect == PixelRect{0, 0, 19, 19});

  const auto g = grid(9, 9, 3, 3, Scale::kCoarse);
  // The centre cell's 4-neighbours form a cross spanning the whole image.
  CHECK(context_box(g, 4, 1).rect == PixelRect{0, 0, 8, 8});
  // Corner cell: itself plus right and lower neighbours.
  CHECK(context_box(g, 0, 1).rect == PixelRect{0, 0, 5, 5});
  CHECK(context_box(g, 0, 2).rect == PixelRect{0, 0, 8, 8});
  for (int r = 0; r < 9; ++r) {
    for (int n = 2; n <= 4; ++n) {
      const auto outer = context_box(g, r, n).rect;
      const auto inner = context_box(g, r, n - 1).rect;
      CHECK(outer.contains(inner));
      CHECK(outer.area() >= inner.area());
      CHECK(g.stats(r).bbox.x0 >= outer.x0);
    }
  }
  CHECK(code_of([&] { context_box(g, 9, 1); }) == ErrorCode::kInvalidRegion);
  CHECK(code_of([&] { context_box(g, 0, 0); }) == ErrorCode::kInvalidParameter);
}

TEST_CASE("crop_context") {
  RasterImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(10 * x + y), static_cast<std::uint8_t>(y), 0});
  CHECK(crop_context(img, img.bounds()) == img);

  const BitMask zeros(4, 4, false);
  const auto black = crop_context(img, img.bounds(), &zeros);
  for (auto v : black.data()) REQUIRE(v == 0);

  const auto c = crop_context(img, {1, 2, 2, 3});
  REQUIRE(c.width() == 2);
  REQUIRE(c.height() == 2);
  CHECK(c.at(0, 0) == Rgb{12, 2, 0});
  CHECK(c.at(1, 0) == Rgb{22, 2, 0});
  CHECK(c.at(0, 1) == Rgb{13, 3, 0});
  CHECK(c.at(1, 1) == Rgb{23, 3, 0});
  CHECK(code_of([&] { crop_context(img, {2, 2, 4, 3}); }) == ErrorCode::kInvalidParameter);
}

TEST_CASE("from_labels canonicalizes and validates") {
  const auto p = SuperpixelPartition::from_labels(3, 1, {7, 7, 2}, Scale::kCoarse);
  CHECK(p.region_count() == 2);
  CHECK(p.label_at(0, 0) == 0);
  CHECK(p.label_at(2, 0) == 1);
  CHECK(p.adjacent(0, 1));
  CHECK(code_of([] { SuperpixelPartition::from_labels(2, 2, {0, 0, 0}, Scale::kFine); }) ==
        ErrorCode::kInvalidParameter);
}

TEST_CASE("partition png and json export") {
  const auto dir = synth::fresh_dir("imaging_export");
  const auto g = grid(16, 16, 4, 4, Scale::kCoarse);
  export_partition(dir / "p.png", dir / "p.json", g);
  CHECK(std::filesystem::file_size(dir / "p.png") > 0);
  CHECK(std::filesystem::file_size(dir / "p.json") > 0);
}

}  // TEST_SUITE
