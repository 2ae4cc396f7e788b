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

// Dictionaries of unit atoms, orthogonal matching pursuit, coding lengths
// and the coding-length -> tag-probability mapping.

#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "features.hpp"

namespace maskforge {

enum class DictionaryKind { kWeak, kStrong, kFlipPos, kFlipNeg };

std::string_view to_string(DictionaryKind kind);
DictionaryKind dictionary_kind_from_string(std::string_view s);

struct AtomProvenance {
  std::string set_id;
  std::string item_id;
  int scale = 0;  // context order for flip atoms, 0 otherwise
  friend bool operator==(const AtomProvenance&, const AtomProvenance&) = default;
};

// Column matrix of unit atoms with per-atom provenance.
class Dictionary {
 public:
  Dictionary(DictionaryKind kind, int dims);

  DictionaryKind kind() const { return kind_; }
  int dims() const { return dims_; }
  int size() const { return static_cast<int>(provenance_.size()); }
  bool empty() const { return provenance_.empty(); }

  // Appends a unit atom; degenerate vectors are rejected (returns false).
  bool add_atom(const FeatureVector& atom, AtomProvenance provenance);

  Eigen::Map<const Eigen::MatrixXd> atoms() const {
    return {storage_.data(), dims_, size()};
  }
  FeatureVector atom(int k) const;
  const std::vector<AtomProvenance>& provenance() const { return provenance_; }

  friend bool operator==(const Dictionary&, const Dictionary&) = default;

 private:
  DictionaryKind kind_;
  int dims_;
  std::vector<double> storage_;  // column-major dims x size
  std::vector<AtomProvenance> provenance_;
};

struct OmpConfig {
  double epsilon = 0.1;  // bound on the squared residual norm
  int max_atoms = 20;
};

struct SparseCode {
  std::vector<int> support;
  std::vector<double> coefficients;
  double residual_norm = 0.0;
  int coding_length = 0;
  // True when the squared residual met epsilon.
  bool converged = true;
  // Effective atom cap, min(max_atoms, dims, dictionary size).
  int max_atoms = 0;
  // Squared residual norm after each selection (the initial norm first).
  std::vector<double> residual_history;
};

// Greedy OMP: pick the atom with the largest |correlation| (lowest index on
// ties), refit least squares on the support, stop once the squared residual
// is <= epsilon or the cap is reached.  Degenerate or small inputs
// (|x|^2 <= epsilon) give an empty code.  Throws DimensionMismatch,
// EmptyDictionary or InvalidParameter.
SparseCode omp_encode(const Dictionary& dict, const FeatureVector& x,
                      const OmpConfig& cfg);

// Length used for ranking: |support| if converged, cap + 1 otherwise.
int penalized_length(const SparseCode& code);

// min over the present codes of penalized_length.  Throws NoCodesPresent.
int coding_length(const SparseCode* weak, const SparseCode* strong);

// ((max - L_t) / (max - min))^q, 0.5 when every length is equal.
// Throws IndexOutOfRange.
double tag_probability(std::span<const int> lengths, std::size_t index,
                       double q);
std::vector<double> tag_probabilities(std::span<const int> lengths, double q);

// |support| / max_atoms for converged codes, 1 otherwise.
double normalized_coding_length(const SparseCode& code, int max_atoms);

nlohmann::json to_json(const SparseCode& code);

}  // namespace maskforge
