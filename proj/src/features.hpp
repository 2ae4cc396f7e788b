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

// Region descriptors, PCA compression, tag embeddings and feature files.

#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imaging.hpp"

namespace maskforge {

// 4x4x4 colour histogram + 16 orientation bins + 4 geometry values.
inline constexpr int kColorBins = 64;
inline constexpr int kOrientationBins = 16;
inline constexpr int kGeometryDims = 4;
inline constexpr int kDescriptorDims =
    kColorBins + kOrientationBins + kGeometryDims;

struct FeatureVector {
  std::vector<double> values;
  // Set when normalization met a (near-)zero vector; the values are then
  // left as zeros.
  bool degenerate = false;

  int dims() const { return static_cast<int>(values.size()); }
  double dot(const FeatureVector& other) const;
  double norm() const;
};

// Scales to unit L2 norm; flags the vector degenerate when the norm is
// below 1e-12.
FeatureVector normalized(std::vector<double> values);

// Built-in descriptor of the masked pixels, L2-normalized.  Throws EmptyMask.
FeatureVector describe_region(const RasterImage& img, const BitMask& mask);
FeatureVector describe_image(const RasterImage& img);

struct PcaModel {
  int input_dims = 0;
  int output_dims = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;  // output_dims x input_dims, orthonormal rows
  Eigen::VectorXd explained_variance;
};

// Mean-centred PCA with the sign of each basis row fixed so that its
// largest-magnitude component is positive.  Throws TooFewSamples or
// DimensionMismatch.
PcaModel fit_pca(std::span<const FeatureVector> samples, int out_dims);

// basis * (x - mean), L2-normalized.  Throws DimensionMismatch.
FeatureVector project(const PcaModel& model, const FeatureVector& x);

// Unnormalized coordinates and their back-projection; used to measure
// reconstruction error.
Eigen::VectorXd project_raw(const PcaModel& model, const FeatureVector& x);
Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& code);

// --- Tag embeddings --------------------------------------------------------

std::string fold_tag(std::string_view tag);

class EmbeddingTable {
 public:
  int dims() const { return dims_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<double>* find(std::string_view token) const;
  // Normalizes `values`; later inserts of the same token replace earlier
  // ones.
  void insert(std::string_view token, std::vector<double> values);

 private:
  int dims_ = 0;
  std::map<std::string, std::vector<double>, std::less<>> entries_;
};

// Text format: one `token v1 ... ve` entry per line.  Throws MalformedLine
// or InconsistentDims.
EmbeddingTable parse_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

// A tag's unit vector.  Tags missing from the table live in a reserved
// one-hot space keyed by the folded token: distinct unknown tags are
// orthogonal to each other and to every table vector.
struct TagVector {
  std::vector<double> dense;
  std::string oov_token;  // non-empty for out-of-vocabulary tags

  bool out_of_vocabulary() const { return !oov_token.empty(); }
};

TagVector tag_vector(const EmbeddingTable& table, std::string_view tag);
double cosine(const TagVector& a, const TagVector& b);

// --- MFV1 feature files ----------------------------------------------------

struct FeatureRecord {
  std::string id;
  FeatureVector vector;
};

// Little-endian: "MFV1", u32 count, u32 dims, then count x (u32 idLength,
// id bytes, dims x float32).  Vectors are L2-normalized on load.
// Throws BadMagic, TruncatedFile or DimensionMismatch.
// `expected_dims` < 0 accepts any width.
std::vector<FeatureRecord> read_feature_file(const std::filesystem::path& path,
                                             int expected_dims = -1);
std::vector<FeatureRecord> parse_feature_file(
    std::span<const std::uint8_t> bytes, int expected_dims = -1);
std::vector<std::uint8_t> serialize_feature_file(
    std::span<const FeatureRecord> records);
void write_feature_file(const std::filesystem::path& path,
                        std::span<const FeatureRecord> records);

}  // namespace maskforge
