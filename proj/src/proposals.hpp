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

// Object proposals: hierarchical grouping of fine superpixels, external
// proposal files, and coding-length scoring.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "features.hpp"
#include "imaging.hpp"
#include "sparsecode.hpp"

namespace maskforge {

struct ObjectProposal {
  BitMask mask;
  // Fine region ids whose union is the mask (empty for loaded proposals).
  std::vector<int> regions;
  double objectness = 0.0;
  FeatureVector feature;
  int coding_length = -1;
  std::optional<double> tag_probability;
};

struct ProposalParams {
  int max_count = 200;
  double color_weight = 0.5;
  double size_weight = 0.3;
  double fill_weight = 0.2;
};

// Greedy agglomeration of adjacent fine regions; every region of the
// hierarchy (leaves included) is a candidate.  Objectness is
// sizeFraction * boundaryContrast with the image frame counted as a
// zero-contrast boundary, scaled to [0, 1] by the best candidate.  Returns
// the top `max_count` by objectness (ties: smaller area, then creation
// order).  Throws InvalidParameter when max_count < 1.
std::vector<ObjectProposal> generate_proposals(const RasterImage& img,
                                               const SuperpixelPartition& fine,
                                               const ProposalParams& params = {});

// RLE JSON: {width, height, proposals: [{objectness, rle: [...]}]}.
// Throws DimensionMismatch or MalformedFile.
std::vector<ObjectProposal> parse_proposals(const nlohmann::json& doc, int width,
                                            int height);
std::vector<ObjectProposal> load_proposals(const std::filesystem::path& path,
                                           int width, int height);
nlohmann::json proposals_to_json(std::span<const ObjectProposal> proposals);

struct ScoringContext {
  const Dictionary* weak = nullptr;    // either may be absent, not both
  const Dictionary* strong = nullptr;
  const PcaModel* pca = nullptr;
  OmpConfig omp;
  double q = 2.0;
};

// Fills feature, coding_length and tag_probability of every proposal.
void score_proposals(std::span<ObjectProposal> proposals, const RasterImage& img,
                     const ScoringContext& ctx);

// Coding length of one projected feature against the available dictionaries.
int score_feature(const FeatureVector& projected, const ScoringContext& ctx);

}  // namespace maskforge
