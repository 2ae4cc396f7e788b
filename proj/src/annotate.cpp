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

#include "annotate.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "error.hpp"

namespace maskforge {

namespace {

constexpr double kBandSlack = 1e-12;

// [value, count, value, count, ...] runs of a label map.
nlohmann::json pack_labels(std::span<const int> labels) {
  nlohmann::json runs = nlohmann::json::array();
  std::size_t i = 0;
  while (i < labels.size()) {
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    runs.push_back(labels[i]);
    runs.push_back(j - i);
    i = j;
  }
  return runs;
}

std::vector<int> unpack_labels(const nlohmann::json& runs, std::size_t expected) {
  if (!runs.is_array() || runs.size() % 2 != 0) {
    throw Error(ErrorCode::kMalformedFile, "label runs must be value/count pairs");
  }
  std::vector<int> labels;
  labels.reserve(expected);
  for (std::size_t i = 0; i < runs.size(); i += 2) {
    const int value = runs[i].get<int>();
    const auto count = runs[i + 1].get<std::size_t>();
    if (labels.size() + count > expected) {
      throw Error(ErrorCode::kMalformedFile, "label runs exceed image size");
    }
    labels.insert(labels.end(), count, value);
  }
  if (labels.size() != expected) {
    throw Error(ErrorCode::kMalformedFile, "label runs do not cover the image");
  }
  return labels;
}

}  // namespace

std::string_view to_string(ClickKind kind) {
  return kind == ClickKind::kLeftFlip ? "leftFlip" : "rightDivide";
}

ClickKind click_kind_from_string(std::string_view s) {
  if (s == "leftFlip") return ClickKind::kLeftFlip;
  if (s == "rightDivide") return ClickKind::kRightDivide;
  throw Error(ErrorCode::kInvalidParameter, "unknown click kind '" + std::string(s) + "'");
}

AnnotationSession::AnnotationSession(std::string image_id, SuperpixelPartition coarse,
                                     SuperpixelPartition fine,
                                     std::vector<double> probabilities,
                                     std::vector<std::uint8_t> labels)
    : image_id_(std::move(image_id)),
      coarse_(std::move(coarse)),
      fine_(std::move(fine)),
      probs_(std::move(probabilities)),
      coarse_labels_(std::move(labels)) {
  if (coarse_.width() != fine_.width() || coarse_.height() != fine_.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "coarse and fine partitions differ in size");
  }
  const auto rc = static_cast<std::size_t>(coarse_.region_count());
  if (probs_.size() != rc || coarse_labels_.size() != rc) {
    throw Error(ErrorCode::kInvalidParameter,
                "expected one probability and label per coarse region");
  }
  for (auto& l : coarse_labels_) l = l ? 1 : 0;
  fine_labels_.assign(fine_.region_count(), 0);
  divided_.assign(rc, 0);
  baseline_ = coarse_labels_;
  index_children();
}

void AnnotationSession::index_children() {
  parent_ = parent_regions(fine_, coarse_);
  children_.assign(coarse_.region_count(), {});
  for (int f = 0; f < fine_.region_count(); ++f) {
    children_[parent_[f]].push_back(fine_id(f));
  }
}

bool AnnotationSession::is_active(int id) const {
  if (is_coarse(id)) return !divided_[id];
  if (is_fine(id)) return divided_[parent(id)] != 0;
  return false;
}

int AnnotationSession::label(int id) const {
  if (!is_active(id)) {
    throw Error(ErrorCode::kInactiveRegion, "region " + std::to_string(id) + " is not active");
  }
  return is_coarse(id) ? coarse_labels_[id] : fine_labels_[id - coarse_count()];
}

std::vector<int> AnnotationSession::active_regions() const {
  std::vector<int> out;
  for (int c = 0; c < coarse_count(); ++c) {
    if (!divided_[c]) out.push_back(c);
  }
  for (int f = 0; f < fine_.region_count(); ++f) {
    if (divided_[parent_[f]]) out.push_back(fine_id(f));
  }
  return out;
}

long long AnnotationSession::pixel_count(int id) const {
  if (is_coarse(id)) return coarse_.stats(id).pixel_count;
  if (is_fine(id)) return fine_.stats(id - coarse_count()).pixel_count;
  throw Error(ErrorCode::kInvalidRegion, "no region " + std::to_string(id));
}

BitMask AnnotationSession::region_mask(int id) const {
  if (is_coarse(id)) return coarse_.region_mask(id);
  if (is_fine(id)) return fine_.region_mask(id - coarse_count());
  throw Error(ErrorCode::kInvalidRegion, "no region " + std::to_string(id));
}

ClickDelta AnnotationSession::apply_click(ClickEvent click) {
  if (sealed_) throw Error(ErrorCode::kAlreadySealed, "session is sealed");
  const int id = click.target;
  ClickDelta delta;
  if (click.kind == ClickKind::kRightDivide) {
    if (is_fine(id) || (is_coarse(id) && divided_[id])) {
      throw Error(ErrorCode::kAlreadyDivided,
                  "region " + std::to_string(id) + " cannot be divided");
    }
    if (!is_coarse(id)) {
      throw Error(ErrorCode::kInactiveRegion, "no region " + std::to_string(id));
    }
    click.pre_label = coarse_labels_[id];
    divided_[id] = 1;
    for (int child : children_[id]) {
      fine_labels_[child - coarse_count()] = coarse_labels_[id];
      delta.added.push_back(child);
    }
    delta.removed.push_back(id);
  } else {
    if (!is_active(id)) {
      throw Error(ErrorCode::kInactiveRegion, "region " + std::to_string(id) + " is not active");
    }
    auto& slot = is_coarse(id) ? coarse_labels_[id] : fine_labels_[id - coarse_count()];
    click.pre_label = slot;
    slot = slot ? 0 : 1;
    delta.changed.push_back(id);
  }
  log_.push_back(click);
  return delta;
}

void AnnotationSession::auto_flip(int coarse_region) {
  if (!log_.empty()) {
    throw Error(ErrorCode::kInvalidParameter, "automatic flips must precede clicks");
  }
  coarse_labels_[coarse_region] ^= 1;
  baseline_[coarse_region] = coarse_labels_[coarse_region];
  auto_flipped_.insert(coarse_region);
}

int AnnotationSession::final_coarse_label(int coarse_region) const {
  if (!divided_[coarse_region]) return coarse_labels_[coarse_region];
  long long on = 0;
  long long off = 0;
  for (int child : children_[coarse_region]) {
    (fine_labels_[child - coarse_count()] ? on : off) += pixel_count(child);
  }
  if (on == off) return baseline_[coarse_region];
  return on > off ? 1 : 0;
}

AnnotationSession AnnotationSession::baseline_copy() const {
  AnnotationSession copy = *this;
  copy.coarse_labels_ = baseline_;
  std::fill(copy.fine_labels_.begin(), copy.fine_labels_.end(), 0);
  std::fill(copy.divided_.begin(), copy.divided_.end(), 0);
  copy.log_.clear();
  copy.sealed_ = false;
  copy.revision_ = 0;
  return copy;
}

nlohmann::json AnnotationSession::to_json() const {
  nlohmann::json clicks = nlohmann::json::array();
  for (const auto& c : log_) clicks.push_back(maskforge::to_json(c));
  return {
      {"imageId", image_id_},
      {"width", coarse_.width()},
      {"height", coarse_.height()},
      {"coarseLabelMap", pack_labels(coarse_.labels())},
      {"fineLabelMap", pack_labels(fine_.labels())},
      {"probabilities", probs_},
      {"coarseLabels", coarse_labels_},
      {"fineLabels", fine_labels_},
      {"divided", divided_},
      {"baselineLabels", baseline_},
      {"autoFlipped", auto_flipped_},
      {"clickLog", clicks},
      {"sealed", sealed_},
      {"revision", revision_},
  };
}

AnnotationSession AnnotationSession::from_json(const nlohmann::json& doc) {
  try {
    const int w = doc.at("width").get<int>();
    const int h = doc.at("height").get<int>();
    if (w <= 0 || h <= 0) throw Error(ErrorCode::kMalformedFile, "bad session dimensions");
    const auto n = static_cast<std::size_t>(w) * h;
    auto coarse = SuperpixelPartition::from_labels(
        w, h, unpack_labels(doc.at("coarseLabelMap"), n), Scale::kCoarse);
    auto fine = SuperpixelPartition::from_labels(
        w, h, unpack_labels(doc.at("fineLabelMap"), n), Scale::kFine);
    AnnotationSession s(doc.at("imageId").get<std::string>(), std::move(coarse),
                        std::move(fine), doc.at("probabilities").get<std::vector<double>>(),
                        doc.at("coarseLabels").get<std::vector<std::uint8_t>>());
    auto fine_labels = doc.at("fineLabels").get<std::vector<std::uint8_t>>();
    auto divided = doc.at("divided").get<std::vector<std::uint8_t>>();
    auto baseline = doc.at("baselineLabels").get<std::vector<std::uint8_t>>();
    if (fine_labels.size() != s.fine_labels_.size() || divided.size() != s.divided_.size() ||
        baseline.size() != s.baseline_.size()) {
      throw Error(ErrorCode::kMalformedFile, "session arrays do not match partitions");
    }
    s.fine_labels_ = std::move(fine_labels);
    s.divided_ = std::move(divided);
    s.baseline_ = std::move(baseline);
    s.auto_flipped_ = doc.at("autoFlipped").get<std::set<int>>();
    for (const auto& c : doc.at("clickLog")) s.log_.push_back(click_from_json(c));
    s.sealed_ = doc.at("sealed").get<bool>();
    s.revision_ = doc.at("revision").get<long long>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("session snapshot: ") + e.what());
  }
}

std::vector<double> superpixel_probability(const SuperpixelPartition& coarse,
                                           std::span<const ObjectProposal> proposals) {
  const int rc = coarse.region_count();
  std::vector<double> num(rc, 0.0);
  std::vector<double> den(rc, 0.0);
  const auto labels = coarse.labels();
  for (const auto& p : proposals) {
    if (p.mask.width() != coarse.width() || p.mask.height() != coarse.height()) {
      throw Error(ErrorCode::kDimensionMismatch, "proposal mask size differs from partition");
    }
    const double prob = p.tag_probability.value_or(0.0);
    const auto bits = p.mask.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (!bits[i]) continue;
      num[labels[i]] += prob;
      den[labels[i]] += 1.0;
    }
  }
  std::vector<double> out(rc, 0.0);
  for (int r = 0; r < rc; ++r) {
    if (den[r] > 0.0) out[r] = std::clamp(num[r] / den[r], 0.0, 1.0);
  }
  return out;
}

std::vector<std::uint8_t> initialize_labels(std::span<const double> probabilities,
                                            double beta0) {
  std::vector<std::uint8_t> labels(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    labels[i] = probabilities[i] >= beta0 ? 1 : 0;
  }
  return labels;
}

std::vector<FeatureVector> context_features(const RasterImage& img,
                                            const SuperpixelPartition& coarse,
                                            int region, int scales,
                                            const PcaModel& pca) {
  if (scales < 1) throw Error(ErrorCode::kInvalidParameter, "scales must be >= 1");
  std::vector<FeatureVector> out;
  out.reserve(scales);
  for (int n = 1; n <= scales; ++n) {
    const auto box = context_box(coarse, region, n);
    out.push_back(project(pca, describe_image(crop_context(img, box.rect))));
  }
  return out;
}

RecordResult record_flips(const AnnotationSession& session, const RasterImage& img,
                          FlipDictionaries& flips, int scales, const PcaModel& pca) {
  RecordResult result;
  const auto baseline = session.baseline_labels();
  for (int c = 0; c < session.coarse_count(); ++c) {
    const int before = baseline[c];
    const int after = session.final_coarse_label(c);
    if (before == after) continue;
    Dictionary& dict = before == 1 ? flips.pos : flips.neg;
    (before == 1 ? result.false_positives : result.false_negatives) += 1;
    const auto feats = context_features(img, session.coarse(), c, scales, pca);
    for (int n = 0; n < scales; ++n) {
      dict.add_atom(feats[n], {session.image_id(), std::to_string(c), n + 1});
    }
  }
  return result;
}

std::vector<int> auto_refine(AnnotationSession& session, const RasterImage& img,
                             const FlipDictionaries& flips, const RefineParams& params,
                             const PcaModel& pca) {
  if (!session.click_log().empty()) {
    throw Error(ErrorCode::kInvalidParameter, "auto_refine must run before any click");
  }
  const bool pos_ready = flips.pos.size() >= flips.min_atoms_to_activate && !flips.pos.empty();
  const bool neg_ready = flips.neg.size() >= flips.min_atoms_to_activate && !flips.neg.empty();
  std::vector<int> to_flip;
  if (!pos_ready && !neg_ready) return to_flip;
  const double lo = params.beta0 - params.delta_beta - kBandSlack;
  const double hi = params.beta0 + params.delta_beta + kBandSlack;
  const auto probs = session.probabilities();
  for (int c = 0; c < session.coarse_count(); ++c) {
    if (probs[c] < lo || probs[c] > hi) continue;
    const int current = session.label(c);
    if (current == 1 ? !pos_ready : !neg_ready) continue;
    const Dictionary& dict = current == 1 ? flips.pos : flips.neg;
    double best = 1.0;
    bool any = false;
    for (const auto& f : context_features(img, session.coarse(), c, params.scales, pca)) {
      // A degenerate context carries no evidence; its empty code would
      // otherwise read as a perfect match.
      if (f.degenerate) continue;
      const auto code = omp_encode(dict, f, params.omp);
      best = std::min(best, normalized_coding_length(code, params.omp.max_atoms));
      any = true;
    }
    if (any && best <= params.beta1 + kBandSlack) to_flip.push_back(c);
  }
  for (int c : to_flip) session.auto_flip(c);
  return to_flip;
}

BitMask export_mask(const AnnotationSession& session) {
  const auto& coarse = session.coarse();
  const auto& fine = session.fine();
  BitMask mask(coarse.width(), coarse.height());
  auto bits = mask.mutable_bits();
  const auto cl = coarse.labels();
  const auto fl = fine.labels();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const int c = cl[i];
    const int id = session.divided(c) ? session.fine_id(fl[i]) : c;
    bits[i] = static_cast<std::uint8_t>(session.label(id));
  }
  return mask;
}

AnnotationSession replay(const AnnotationSession& session,
                         std::span<const ClickEvent> log) {
  AnnotationSession fresh = session.baseline_copy();
  for (const auto& click : log) fresh.apply_click(click);
  return fresh;
}

nlohmann::json to_json(const ClickEvent& click) {
  return {{"kind", to_string(click.kind)},
          {"target", click.target},
          {"preLabel", click.pre_label},
          {"timestamp", click.timestamp}};
}

ClickEvent click_from_json(const nlohmann::json& doc) {
  try {
    ClickEvent c;
    c.kind = click_kind_from_string(doc.at("kind").get<std::string>());
    c.target = doc.at("target").get<int>();
    c.pre_label = doc.value("preLabel", 0);
    c.timestamp = doc.value("timestamp", 0LL);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("click event: ") + e.what());
  }
}

}  // namespace maskforge
