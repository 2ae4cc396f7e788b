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

// Synthetic datasets: coloured geometric objects on textured backgrounds
// with exact ground-truth masks.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "imaging.hpp"

namespace maskforge::synth {

enum class Shape { kDisc, kSquare, kTriangle };

struct Palette {
  Rgb background_a;
  Rgb background_b;
  Rgb object;
};

struct SceneOptions {
  int size = 96;
  Shape shape = Shape::kDisc;
  Palette palette{{70, 110, 80}, {90, 130, 100}, {200, 40, 40}};
  // Background stripe direction in radians; negative picks one at random.
  double stripe_angle = -1.0;
  // Optional fixed distractor patch (top-left corner, side) drawn with
  // `distractor_colour` and a checker texture.  The distractor is not part
  // of the ground truth.
  bool distractor = false;
  int distractor_x = 6;
  int distractor_y = 6;
  int distractor_side = 22;
  Rgb distractor_colour{170, 80, 60};
  int distractor_cell = 3;  // checker cell size, 0 for a solid patch
  Shape distractor_shape = Shape::kSquare;  // drawn inscribed in the box
  // Concentric core of the distractor, as a fraction of its half side.
  double distractor_core = 0.0;
  Rgb distractor_core_colour{200, 130, 40};
};

struct Scene {
  RasterImage image;
  BitMask truth;
};

Scene make_scene(std::mt19937_64& rng, const SceneOptions& options);

struct SetSpec {
  std::string set_id;
  std::vector<std::string> tags;
  bool annotated = false;
  int images = 10;
  SceneOptions scene;
};

// Writes PNG images and masks plus manifest.json under `dir`; returns the
// manifest path.  Unannotated sets also get masks (ground truth for the
// oracle).
std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    const std::vector<SetSpec>& sets, std::uint64_t seed);

// The three-set object dataset used by the end-to-end checks.
std::vector<SetSpec> object_dataset_spec();

// One 20-image set with a recurring distractor patch, plus an annotated
// reference set.
std::vector<SetSpec> distractor_dataset_spec();

std::filesystem::path fresh_dir(const std::string& name);

}  // namespace maskforge::synth
