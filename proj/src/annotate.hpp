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

// Per-image annotation state: label initialization from scored proposals,
// flip/divide clicks, flip dictionaries and automatic refinement.
//
// Region ids are unified across scales: ids [0, C) name the C coarse
// regions, id C + f names fine region f of the refined partition.

#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "features.hpp"
#include "imaging.hpp"
#include "proposals.hpp"
#include "sparsecode.hpp"

namespace maskforge {

enum class ClickKind { kLeftFlip, kRightDivide };

std::string_view to_string(ClickKind kind);
ClickKind click_kind_from_string(std::string_view s);

struct ClickEvent {
  ClickKind kind = ClickKind::kLeftFlip;
  int target = 0;
  long long timestamp = 0;
  int pre_label = 0;  // filled in by apply_click
  friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
};

// What a click changed; ids are unified region ids.
struct ClickDelta {
  std::vector<int> changed;  // regions whose label changed
  std::vector<int> removed;  // regions that stopped being active
  std::vector<int> added;    // regions that became active
};

class AnnotationSession {
 public:
  AnnotationSession() = default;
  // `fine` must refine `coarse`.  Throws DimensionMismatch or
  // InvalidParameter.
  AnnotationSession(std::string image_id, SuperpixelPartition coarse,
                    SuperpixelPartition fine, std::vector<double> probabilities,
                    std::vector<std::uint8_t> labels);

  const std::string& image_id() const { return image_id_; }
  const SuperpixelPartition& coarse() const { return coarse_; }
  const SuperpixelPartition& fine() const { return fine_; }
  int coarse_count() const { return coarse_.region_count(); }
  int fine_id(int fine_region) const { return coarse_count() + fine_region; }
  bool is_coarse(int id) const { return id >= 0 && id < coarse_count(); }
  bool is_fine(int id) const {
    return id >= coarse_count() && id < coarse_count() + fine_.region_count();
  }

  std::span<const double> probabilities() const { return probs_; }
  bool divided(int coarse_region) const { return divided_[coarse_region] != 0; }
  bool is_active(int id) const;
  // Throws InactiveRegion for ids that are not active.
  int label(int id) const;
  std::vector<int> active_regions() const;
  // Unified ids of the fine children of a coarse region.
  std::span<const int> children(int coarse_region) const { return children_[coarse_region]; }
  int parent(int fine_unified_id) const { return parent_[fine_unified_id - coarse_count()]; }
  long long pixel_count(int id) const;
  BitMask region_mask(int id) const;

  // Throws InactiveRegion, AlreadyDivided or AlreadySealed.
  ClickDelta apply_click(ClickEvent click);
  const std::vector<ClickEvent>& click_log() const { return log_; }

  // Labels shown to the annotator before the first click (after automatic
  // refinement).
  std::span<const std::uint8_t> baseline_labels() const { return baseline_; }
  const std::set<int>& auto_flipped() const { return auto_flipped_; }
  // Flips a coarse region before any click; used by auto_refine.
  void auto_flip(int coarse_region);

  // Undivided: its label.  Divided: area-weighted majority of its children,
  // the baseline label on an exact tie.
  int final_coarse_label(int coarse_region) const;

  // Fresh session at the baseline state with an empty click log.
  AnnotationSession baseline_copy() const;

  bool sealed() const { return sealed_; }
  void seal() { sealed_ = true; }
  long long revision() const { return revision_; }
  void bump_revision() { ++revision_; }

  nlohmann::json to_json() const;
  static AnnotationSession from_json(const nlohmann::json& doc);

 private:
  void index_children();

  std::string image_id_;
  SuperpixelPartition coarse_;
  SuperpixelPartition fine_;
  std::vector<double> probs_;
  std::vector<std::uint8_t> coarse_labels_;
  std::vector<std::uint8_t> fine_labels_;
  std::vector<std::uint8_t> divided_;
  std::vector<std::uint8_t> baseline_;
  std::set<int> auto_flipped_;
  std::vector<ClickEvent> log_;
  bool sealed_ = false;
  long long revision_ = 0;
  std::vector<std::vector<int>> children_;
  std::vector<int> parent_;
};

// Coverage-weighted mean of proposal probabilities per coarse region; 0 for
// regions no proposal touches.
std::vector<double> superpixel_probability(const SuperpixelPartition& coarse,
                                           std::span<const ObjectProposal> proposals);

// 1 iff probability >= beta0.
std::vector<std::uint8_t> initialize_labels(std::span<const double> probabilities,
                                            double beta0);

struct FlipDictionaries {
  FlipDictionaries(int dims, int min_atoms_to_activate)
      : pos(DictionaryKind::kFlipPos, dims),
        neg(DictionaryKind::kFlipNeg, dims),
        min_atoms_to_activate(min_atoms_to_activate) {}

  Dictionary pos;  // contexts of false positives
  Dictionary neg;  // contexts of false negatives
  int min_atoms_to_activate;
};

// Projected descriptors of the context boxes of orders 1..scales.
std::vector<FeatureVector> context_features(const RasterImage& img,
                                            const SuperpixelPartition& coarse,
                                            int region, int scales,
                                            const PcaModel& pca);

struct RecordResult {
  int false_positives = 0;
  int false_negatives = 0;
};

// Appends the context features of every coarse region whose final label
// differs from its baseline label: 1 -> 0 to pos, 0 -> 1 to neg.
RecordResult record_flips(const AnnotationSession& session, const RasterImage& img,
                          FlipDictionaries& flips, int scales, const PcaModel& pca);

struct RefineParams {
  double beta0 = 0.4;
  double delta_beta = 0.15;
  double beta1 = 0.1;
  int scales = 3;
  OmpConfig omp;
};

// Inverts uncertain coarse labels whose contexts encode in very few atoms of
// the matching flip dictionary.  Returns the flipped coarse ids.  Throws
// InvalidParameter when the session already has clicks.
std::vector<int> auto_refine(AnnotationSession& session, const RasterImage& img,
                             const FlipDictionaries& flips, const RefineParams& params,
                             const PcaModel& pca);

BitMask export_mask(const AnnotationSession& session);

// Applies `log` to the baseline state of `session`.
AnnotationSession replay(const AnnotationSession& session,
                         std::span<const ClickEvent> log);

nlohmann::json to_json(const ClickEvent& click);
ClickEvent click_from_json(const nlohmann::json& doc);

}  // namespace maskforge
