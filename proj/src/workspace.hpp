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

// On-disk workspace: configuration, dataset manifest, per-set dictionaries
// and the annotation session store.
//
// Layout under the root directory:
//   manifest.json              resolved copy of the input manifest
//   config.json                tunables (optional; MASKFORGE_CONFIG wins)
//   sets/<setId>/pca.json      projection shared by all dictionaries
//   sets/<setId>/{weak,strong,flipPos,flipNeg}.{mfv,json}
//   sessions/<sessionId>.json  session snapshots
//   masks/<imageId>.png        committed masks
//   clicks/<imageId>.jsonl     committed click logs

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "annotate.hpp"
#include "features.hpp"
#include "imaging.hpp"
#include "sparsecode.hpp"

namespace maskforge {

struct Config {
  double beta0 = 0.4;
  double delta_beta = 0.15;
  double beta1 = 0.1;
  double epsilon = 0.1;
  double q = 2.0;
  int max_proposals = 200;
  int scales = 3;
  int coarse_regions = 100;
  int fine_regions = 1000;
  int max_atoms = 20;
  double related_threshold = 0.95;
  int fallback_sets = 5;
  double compactness = 10.0;
  int slic_iterations = 10;
  std::uint64_t seed = 0;
  int min_region_pixels = 4;
  int oracle_max_clicks = 1000;

  OmpConfig omp() const { return {epsilon, max_atoms}; }
  RefineParams refine() const { return {beta0, delta_beta, beta1, scales, omp()}; }

  // Throws InvalidParameter on out-of-range values.
  void validate() const;
  nlohmann::json to_json() const;
  // Keys missing from `doc` keep their current values; unknown keys throw
  // InvalidParameter.  A rejected document leaves the config unchanged.
  void merge(const nlohmann::json& doc);
};

// Defaults, then <root>/config.json, then the file named by
// MASKFORGE_CONFIG.
Config load_config(const std::filesystem::path& root);

struct ImageEntry {
  std::string id;
  std::string set_id;
  std::filesystem::path path;
  std::optional<std::filesystem::path> mask_path;
  std::optional<std::string> feature_id;
  std::optional<std::filesystem::path> proposals_path;
};

struct SetEntry {
  std::string set_id;
  std::vector<std::string> tags;
  std::vector<std::string> image_ids;
  bool annotated = false;
};

struct Manifest {
  std::vector<SetEntry> sets;
  std::vector<ImageEntry> images;
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::filesystem::path> feature_file;

  const SetEntry* find_set(const std::string& id) const;
  const ImageEntry* find_image(const std::string& id) const;
  nlohmann::json to_json() const;
};

// Relative paths resolve against `base_dir`.  Throws ManifestInvalid.
Manifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);

struct InitSummary {
  int query_sets = 0;
  int weak_atoms = 0;
  int strong_atoms = 0;
};

// Builds the projection and weak/strong dictionaries of every unannotated
// set and writes them with empty flip dictionaries.  Re-running overwrites
// derived files.  Throws ManifestInvalid or IoError.
InitSummary init_workspace(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& workspace_dir);

struct SetArtifacts {
  PcaModel pca;
  std::optional<Dictionary> weak;
  std::optional<Dictionary> strong;
  FlipDictionaries flips;
};

// Image-level pipeline output that does not depend on flip dictionaries.
struct PreparedImage {
  std::string image_id;
  std::string set_id;
  RasterImage image;
  SuperpixelPartition coarse;
  SuperpixelPartition fine;  // refined by the coarse boundaries
  std::vector<double> probabilities;
};

class Workspace {
 public:
  // Throws IoError or ManifestInvalid when the workspace is missing or
  // malformed.
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  const Config& config() const { return config_; }
  // Drops cached pipeline results.
  void set_config(Config config);
  const Manifest& manifest() const { return manifest_; }

  // Throws UnknownImage.
  const ImageEntry& image(const std::string& image_id) const;
  std::optional<BitMask> truth_mask(const std::string& image_id) const;

  // Throws UnknownImage when the set has no artifacts (annotated sets).
  SetArtifacts& artifacts(const std::string& set_id);
  void save_flips(const std::string& set_id);
  // Empty flip dictionaries sized for the set's projection.
  FlipDictionaries empty_flips(const std::string& set_id);

  const PreparedImage& prepare(const std::string& image_id);

  // Pipeline session; auto_refine runs when `flips` is given.
  AnnotationSession start_session(const std::string& image_id,
                                  const FlipDictionaries* flips);

  // --- Session store (session id = image id) ---
  // Throws UnknownImage or SessionExists.
  const AnnotationSession& create_session(const std::string& image_id);
  // Throws UnknownSession.
  const AnnotationSession& session(const std::string& session_id);
  // Throws UnknownSession, StaleRevision, AlreadySealed and the click errors.
  ClickDelta click(const std::string& session_id, ClickEvent event,
                   std::optional<long long> revision);

  struct CommitResult {
    std::filesystem::path mask_path;
    RecordResult flips;
    long long revision = 0;
  };
  CommitResult commit(const std::string& session_id, std::optional<long long> revision);

  // Serializes store access from concurrent request handlers.
  std::mutex& mutex() { return mutex_; }

 private:
  AnnotationSession& mutable_session(const std::string& session_id);
  void persist(const AnnotationSession& s) const;
  std::filesystem::path session_path(const std::string& id) const;

  std::filesystem::path root_;
  Config config_;
  Manifest manifest_;
  std::map<std::string, std::unique_ptr<SetArtifacts>> artifacts_;
  std::map<std::string, std::unique_ptr<PreparedImage>> prepared_;
  std::map<std::string, AnnotationSession> sessions_;
  std::mutex mutex_;
};

}  // namespace maskforge
