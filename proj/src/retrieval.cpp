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

#include "retrieval.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "error.hpp"
#include "image_io.hpp"

namespace maskforge {

using nlohmann::json;

ImageSetRecord make_set_record(std::string set_id, std::vector<std::string> tags,
                               std::vector<std::string> image_ids,
                               std::span<const FeatureVector> features,
                               bool has_masks) {
  if (tags.empty()) throw Error(ErrorCode::kEmptyTagList, "set " + set_id + " has no tags");
  if (features.empty() || features.size() != image_ids.size()) {
    throw Error(ErrorCode::kMissingFeatures, "set " + set_id + " lacks image features");
  }
  const int dims = features.front().dims();
  std::vector<double> mean(dims, 0.0);
  for (const auto& f : features) {
    if (f.dims() != dims) throw Error(ErrorCode::kDimensionMismatch, "set " + set_id);
    for (int i = 0; i < dims; ++i) mean[i] += f.values[i];
  }
  for (double& v : mean) v /= static_cast<double>(features.size());
  ImageSetRecord rec;
  rec.set_id = std::move(set_id);
  rec.tags = std::move(tags);
  rec.image_ids = std::move(image_ids);
  rec.mean_visual = normalized(mean);
  rec.raw_mean = std::move(mean);
  rec.has_masks = has_masks;
  return rec;
}

double linguistic_similarity(std::span<const std::string> a,
                             std::span<const std::string> b,
                             const EmbeddingTable& table) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptyTagList, "tag list is empty");
  std::vector<TagVector> vb;
  vb.reserve(b.size());
  for (const auto& t : b) vb.push_back(tag_vector(table, t));
  double sum = 0.0;
  for (const auto& t : a) {
    const TagVector u = tag_vector(table, t);
    for (const auto& v : vb) sum += cosine(u, v);
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double visual_similarity(const ImageSetRecord& a, const ImageSetRecord& b) {
  if (a.raw_mean.empty() || a.raw_mean.size() != b.raw_mean.size()) {
    throw Error(ErrorCode::kMissingFeatures, "sets " + a.set_id + ", " + b.set_id);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.raw_mean.size(); ++i) s += a.raw_mean[i] * b.raw_mean[i];
  return s;
}

double visual_similarity(std::span<const FeatureVector> a,
                         std::span<const FeatureVector> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kMissingFeatures, "empty image set");
  const int dims = a.front().dims();
  std::vector<double> ma(dims, 0.0), mb(dims, 0.0);
  for (const auto& f : a) {
    if (f.dims() != dims) throw Error(ErrorCode::kDimensionMismatch, "feature dims differ");
    for (int i = 0; i < dims; ++i) ma[i] += f.values[i];
  }
  for (const auto& f : b) {
    if (f.dims() != dims) throw Error(ErrorCode::kDimensionMismatch, "feature dims differ");
    for (int i = 0; i < dims; ++i) mb[i] += f.values[i];
  }
  double s = 0.0;
  for (int i = 0; i < dims; ++i) s += ma[i] * mb[i];
  return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double set_similarity(double linguistic, double visual) {
  const double sl = std::clamp(linguistic, 0.0, 1.0);
  const double sv = std::clamp(visual, 0.0, 1.0);
  if (sl + sv <= 1e-12) return 0.0;
  return 2.0 * sl * sv / (sl + sv);
}

std::vector<RankedSet> select_related_sets(const ImageSetRecord& query,
                                           std::span<const ImageSetRecord> corpus,
                                           const EmbeddingTable& table,
                                           double threshold, int fallback_k) {
  std::vector<RankedSet> all;
  for (const auto& rec : corpus) {
    if (rec.set_id == query.set_id) continue;
    const double sl = linguistic_similarity(query.tags, rec.tags, table);
    const double sv = visual_similarity(query, rec);
    all.push_back({&rec, set_similarity(sl, sv)});
  }
  std::sort(all.begin(), all.end(), [](const RankedSet& x, const RankedSet& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    return x.set->set_id < y.set->set_id;
  });
  std::vector<RankedSet> passed;
  for (const auto& r : all)
    if (r.similarity > threshold) passed.push_back(r);
  if (!passed.empty()) return passed;
  if (static_cast<int>(all.size()) > fallback_k) all.resize(std::max(fallback_k, 0));
  return all;
}

Dictionary build_dictionary(DictionaryKind kind, std::span<const FeatureItem> items,
                            const PcaModel& pca) {
  Dictionary dict(kind, pca.output_dims);
  for (const auto& item : items) {
    const FeatureVector atom = project(pca, item.feature);
    if (!dict.add_atom(atom, {item.set_id, item.item_id, 0})) {
      warn("skipping degenerate " + std::string(to_string(kind)) + " atom " +
           item.set_id + "/" + item.item_id);
    }
  }
  if (dict.empty()) {
    throw Error(ErrorCode::kEmptyDictionary,
                std::string(to_string(kind)) + " dictionary has no atoms");
  }
  return dict;
}

Dictionary build_weak_dictionary(std::span<const FeatureItem> image_features,
                                 const PcaModel& pca) {
  return build_dictionary(DictionaryKind::kWeak, image_features, pca);
}

FeatureVector describe_masked_object(const RasterImage& img, const BitMask& mask) {
  const PixelRect box = mask.bounding_box();
  if (box.empty()) throw Error(ErrorCode::kEmptyMask, "object mask is empty");
  const RasterImage crop = crop_context(img, box, &mask);
  return describe_image(crop);
}

std::vector<FeatureItem> strong_object_features(std::span<const MaskedImage> items) {
  std::vector<FeatureItem> out;
  for (const auto& item : items) {
    if (!item.mask || !item.image) {
      throw Error(ErrorCode::kMissingMask, item.set_id + "/" + item.item_id);
    }
    if (!item.mask->any()) {
      warn("skipping empty object mask " + item.set_id + "/" + item.item_id);
      continue;
    }
    out.push_back({item.set_id, item.item_id, describe_masked_object(*item.image, *item.mask)});
  }
  return out;
}

Dictionary build_strong_dictionary(std::span<const MaskedImage> items,
                                   const PcaModel& pca) {
  const auto features = strong_object_features(items);
  return build_dictionary(DictionaryKind::kStrong, features, pca);
}

int default_pca_dims(std::size_t samples, int input_dims) {
  const long long by_samples = static_cast<long long>(samples) - 1;
  return static_cast<int>(std::max<long long>(
      1, std::min<long long>({100, by_samples, input_dims})));
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, {text.begin(), text.end()});
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

}  // namespace

void save_dictionary(const std::filesystem::path& stem, const Dictionary& dict) {
  std::vector<FeatureRecord> records;
  records.reserve(dict.size());
  json prov = json::array();
  for (int k = 0; k < dict.size(); ++k) {
    const auto& p = dict.provenance()[k];
    records.push_back({p.set_id + "/" + p.item_id, dict.atom(k)});
    prov.push_back({{"setId", p.set_id}, {"itemId", p.item_id}, {"scale", p.scale}});
  }
  write_feature_file(with_suffix(stem, ".mfv"), records);
  const json sidecar = {{"kind", to_string(dict.kind())},
                        {"dims", dict.dims()},
                        {"atoms", dict.size()},
                        {"provenance", prov}};
  write_text(with_suffix(stem, ".json"), sidecar.dump(2) + "\n");
}

Dictionary load_dictionary(const std::filesystem::path& stem) {
  const json sidecar = read_json(with_suffix(stem, ".json"));
  try {
    const int dims = sidecar.at("dims").get<int>();
    Dictionary dict(dictionary_kind_from_string(sidecar.at("kind").get<std::string>()), dims);
    const auto records = read_feature_file(with_suffix(stem, ".mfv"));
    const auto& prov = sidecar.at("provenance");
    if (prov.size() != records.size()) {
      throw Error(ErrorCode::kMalformedFile, stem.string() + ": provenance count mismatch");
    }
    for (std::size_t k = 0; k < records.size(); ++k) {
      if (records[k].vector.dims() != dims) {
        throw Error(ErrorCode::kDimensionMismatch, stem.string());
      }
      dict.add_atom(records[k].vector,
                    {prov[k].at("setId").get<std::string>(),
                     prov[k].at("itemId").get<std::string>(), prov[k].at("scale").get<int>()});
    }
    return dict;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, stem.string() + ": " + e.what());
  }
}

void save_pca(const std::filesystem::path& path, const PcaModel& pca) {
  json basis = json::array();
  for (int k = 0; k < pca.output_dims; ++k) {
    std::vector<double> row(pca.input_dims);
    for (int j = 0; j < pca.input_dims; ++j) row[j] = pca.basis(k, j);
    basis.push_back(row);
  }
  const json doc = {
      {"inputDims", pca.input_dims},
      {"outputDims", pca.output_dims},
      {"mean", std::vector<double>(pca.mean.data(), pca.mean.data() + pca.mean.size())},
      {"explainedVariance",
       std::vector<double>(pca.explained_variance.data(),
                           pca.explained_variance.data() + pca.explained_variance.size())},
      {"basis", basis}};
  write_text(path, doc.dump() + "\n");
}

PcaModel load_pca(const std::filesystem::path& path) {
  const json doc = read_json(path);
  try {
    PcaModel m;
    m.input_dims = doc.at("inputDims").get<int>();
    m.output_dims = doc.at("outputDims").get<int>();
    const auto mean = doc.at("mean").get<std::vector<double>>();
    const auto var = doc.at("explainedVariance").get<std::vector<double>>();
    const auto& basis = doc.at("basis");
    if (static_cast<int>(mean.size()) != m.input_dims ||
        static_cast<int>(var.size()) != m.output_dims ||
        static_cast<int>(basis.size()) != m.output_dims) {
      throw Error(ErrorCode::kMalformedFile, path.string() + ": inconsistent PCA sizes");
    }
    m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), m.input_dims);
    m.explained_variance = Eigen::Map<const Eigen::VectorXd>(var.data(), m.output_dims);
    m.basis.resize(m.output_dims, m.input_dims);
    for (int k = 0; k < m.output_dims; ++k) {
      const auto row = basis[k].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != m.input_dims) {
        throw Error(ErrorCode::kMalformedFile, path.string() + ": basis row width");
      }
      for (int j = 0; j < m.input_dims; ++j) m.basis(k, j) = row[j];
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
}

}  // namespace maskforge
