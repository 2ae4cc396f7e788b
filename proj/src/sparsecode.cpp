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

#include "sparsecode.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace maskforge {

std::string_view to_string(DictionaryKind kind) {
  switch (kind) {
    case DictionaryKind::kWeak: return "weak";
    case DictionaryKind::kStrong: return "strong";
    case DictionaryKind::kFlipPos: return "flipPos";
    case DictionaryKind::kFlipNeg: return "flipNeg";
  }
  return "weak";
}

DictionaryKind dictionary_kind_from_string(std::string_view s) {
  if (s == "weak") return DictionaryKind::kWeak;
  if (s == "strong") return DictionaryKind::kStrong;
  if (s == "flipPos") return DictionaryKind::kFlipPos;
  if (s == "flipNeg") return DictionaryKind::kFlipNeg;
  throw Error(ErrorCode::kMalformedFile, "unknown dictionary kind " + std::string(s));
}

Dictionary::Dictionary(DictionaryKind kind, int dims) : kind_(kind), dims_(dims) {
  if (dims < 1) throw Error(ErrorCode::kInvalidParameter, "dictionary dims must be >= 1");
}

bool Dictionary::add_atom(const FeatureVector& atom, AtomProvenance provenance) {
  if (atom.dims() != dims_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "atom has " + std::to_string(atom.dims()) + " dims, dictionary " +
                    std::to_string(dims_));
  }
  const double n = atom.norm();
  if (atom.degenerate || n < 1e-12) return false;
  for (double v : atom.values) storage_.push_back(v / n);
  provenance_.push_back(std::move(provenance));
  return true;
}

FeatureVector Dictionary::atom(int k) const {
  const auto begin = storage_.begin() + static_cast<long>(k) * dims_;
  return {std::vector<double>(begin, begin + dims_), false};
}

SparseCode omp_encode(const Dictionary& dict, const FeatureVector& x,
                      const OmpConfig& cfg) {
  if (x.dims() != dict.dims()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query has " + std::to_string(x.dims()) + " dims, dictionary " +
                    std::to_string(dict.dims()));
  }
  if (!(cfg.epsilon > 0.0) || cfg.max_atoms < 1) {
    throw Error(ErrorCode::kInvalidParameter, "epsilon must be > 0 and maxAtoms >= 1");
  }
  if (dict.empty()) throw Error(ErrorCode::kEmptyDictionary, "cannot encode against 0 atoms");

  const auto atoms = dict.atoms();
  const Eigen::Map<const Eigen::VectorXd> target(x.values.data(), x.dims());
  SparseCode code;
  code.max_atoms = std::min({cfg.max_atoms, dict.dims(), dict.size()});

  Eigen::VectorXd residual = target;
  double r2 = x.degenerate ? 0.0 : residual.squaredNorm();
  code.residual_history.push_back(r2);
  if (x.degenerate || r2 <= cfg.epsilon) {
    code.residual_norm = std::sqrt(r2);
    return code;
  }

  std::vector<char> used(dict.size(), 0);
  Eigen::VectorXd alpha;
  while (static_cast<int>(code.support.size()) < code.max_atoms) {
    const Eigen::VectorXd corr = atoms.transpose() * residual;
    int best = -1;
    double best_abs = 0.0;
    for (int k = 0; k < dict.size(); ++k) {
      if (used[k]) continue;
      const double a = std::abs(corr[k]);
      if (best < 0 || a > best_abs + 1e-12) {
        best = k;
        best_abs = a;
      }
    }
    if (best < 0 || best_abs < 1e-14) break;  // residual orthogonal to all atoms
    used[best] = 1;
    code.support.push_back(best);

    const auto s = static_cast<Eigen::Index>(code.support.size());
    Eigen::MatrixXd sub(dict.dims(), s);
    for (Eigen::Index j = 0; j < s; ++j) sub.col(j) = atoms.col(code.support[j]);
    alpha = sub.completeOrthogonalDecomposition().solve(target);
    residual = target - sub * alpha;
    r2 = residual.squaredNorm();
    code.residual_history.push_back(r2);
    if (r2 <= cfg.epsilon) break;
  }
  code.coefficients.assign(alpha.data(), alpha.data() + alpha.size());
  code.residual_norm = std::sqrt(r2);
  code.coding_length = static_cast<int>(code.support.size());
  code.converged = r2 <= cfg.epsilon;
  return code;
}

int penalized_length(const SparseCode& code) {
  return code.converged ? code.coding_length : code.max_atoms + 1;
}

int coding_length(const SparseCode* weak, const SparseCode* strong) {
  if (!weak && !strong) {
    throw Error(ErrorCode::kNoCodesPresent, "neither weak nor strong code present");
  }
  if (!weak) return penalized_length(*strong);
  if (!strong) return penalized_length(*weak);
  return std::min(penalized_length(*weak), penalized_length(*strong));
}

double tag_probability(std::span<const int> lengths, std::size_t index, double q) {
  if (index >= lengths.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "index " + std::to_string(index) + " of " + std::to_string(lengths.size()));
  }
  const auto [lo, hi] = std::minmax_element(lengths.begin(), lengths.end());
  if (*hi == *lo) return 0.5;
  const double ratio = static_cast<double>(*hi - lengths[index]) /
                       static_cast<double>(*hi - *lo);
  return std::pow(ratio, q);
}

std::vector<double> tag_probabilities(std::span<const int> lengths, double q) {
  std::vector<double> out(lengths.size());
  for (std::size_t i = 0; i < lengths.size(); ++i) out[i] = tag_probability(lengths, i, q);
  return out;
}

double normalized_coding_length(const SparseCode& code, int max_atoms) {
  if (!code.converged || max_atoms < 1) return 1.0;
  return std::min(1.0, static_cast<double>(code.coding_length) / max_atoms);
}

nlohmann::json to_json(const SparseCode& code) {
  return {{"support", code.support},
          {"coefficients", code.coefficients},
          {"residualNorm", code.residual_norm},
          {"codingLength", code.coding_length},
          {"converged", code.converged}};
}

}  // namespace maskforge
