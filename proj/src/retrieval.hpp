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

// Image-set similarity, related-set selection and weak/strong dictionary
// construction.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "features.hpp"
#include "imaging.hpp"
#include "sparsecode.hpp"

namespace maskforge {

struct ImageSetRecord {
  std::string set_id;
  std::vector<std::string> tags;
  std::vector<std::string> image_ids;
  // Unit-normalized mean of the member image features.
  FeatureVector mean_visual;
  // The same mean before renormalization; visual_similarity uses it.
  std::vector<double> raw_mean;
  bool has_masks = false;
};

// Throws MissingFeatures when `features` is empty or sized unlike
// `image_ids`, EmptyTagList when `tags` is empty.
ImageSetRecord make_set_record(std::string set_id, std::vector<std::string> tags,
                               std::vector<std::string> image_ids,
                               std::span<const FeatureVector> features,
                               bool has_masks);

// Mean pairwise cosine of tag vectors.  Throws EmptyTagList.
double linguistic_similarity(std::span<const std::string> a,
                             std::span<const std::string> b,
                             const EmbeddingTable& table);

// Mean pairwise inner product of member features, evaluated as the inner
// product of the two (unnormalized) mean vectors.  Throws MissingFeatures.
double visual_similarity(const ImageSetRecord& a, const ImageSetRecord& b);
double visual_similarity(std::span<const FeatureVector> a,
                         std::span<const FeatureVector> b);

// 2*sl*sv / (sl + sv) after clamping both to [0, 1]; 0 when the clamped
// sum is <= 1e-12.
double set_similarity(double linguistic, double visual);

struct RankedSet {
  const ImageSetRecord* set = nullptr;
  double similarity = 0.0;
};

inline constexpr double kDefaultRelatedThreshold = 0.95;
inline constexpr int kDefaultFallbackSets = 5;

// Sets whose similarity to `query` exceeds `threshold`, best first (ties by
// set id).  When none pass, the best `fallback_k` are returned instead.
// The query (matched by set id) is never compared with itself.
std::vector<RankedSet> select_related_sets(const ImageSetRecord& query,
                                           std::span<const ImageSetRecord> corpus,
                                           const EmbeddingTable& table,
                                           double threshold = kDefaultRelatedThreshold,
                                           int fallback_k = kDefaultFallbackSets);

struct FeatureItem {
  std::string set_id;
  std::string item_id;
  FeatureVector feature;
};

// Projects each feature with `pca` and appends it as an atom.  Degenerate
// projections are skipped with a warning.  Throws EmptyDictionary when no
// atom survives.
Dictionary build_dictionary(DictionaryKind kind, std::span<const FeatureItem> items,
                            const PcaModel& pca);

Dictionary build_weak_dictionary(std::span<const FeatureItem> image_features,
                                 const PcaModel& pca);

struct MaskedImage {
  std::string set_id;
  std::string item_id;
  const RasterImage* image = nullptr;
  const BitMask* mask = nullptr;
};

// Descriptor of the object: bounding-box crop with pixels outside the mask
// zeroed.  Throws EmptyMask.
FeatureVector describe_masked_object(const RasterImage& img, const BitMask& mask);

// Object features of annotated images; empty masks are skipped with a
// warning.  Throws MissingMask when an entry has no mask.
std::vector<FeatureItem> strong_object_features(std::span<const MaskedImage> items);

Dictionary build_strong_dictionary(std::span<const MaskedImage> items,
                                   const PcaModel& pca);

// Default PCA width: min(100, samples - 1, input dims), at least 1.
int default_pca_dims(std::size_t samples, int input_dims);

// Persistence: `<stem>.mfv` holds the atoms, `<stem>.json` the kind and
// per-atom provenance.
void save_dictionary(const std::filesystem::path& stem, const Dictionary& dict);
Dictionary load_dictionary(const std::filesystem::path& stem);
void save_pca(const std::filesystem::path& path, const PcaModel& pca);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace maskforge
