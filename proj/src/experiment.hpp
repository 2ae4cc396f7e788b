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

// Batch experiments over a workspace: oracle simulation, the flip-dictionary
// evolvability study, and scoring of externally produced masks.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evaluate.hpp"
#include "workspace.hpp"

namespace maskforge {

struct ImageOutcome {
  std::string image_id;
  MaskMetrics init;
  MaskMetrics final;
  int clicks = 0;
  int auto_flips = 0;
  bool budget_exceeded = false;
};

struct ExperimentReport {
  bool flip_dict_enabled = true;
  std::string split_label;
  std::vector<ImageOutcome> per_image;

  int total_clicks() const;
  // Arithmetic means over per_image (0 when empty).
  MaskMetrics mean_init() const;
  MaskMetrics mean_final() const;
  double mean_clicks() const;
  double mean_auto_flips() const;

  nlohmann::json to_json() const;
  // Header: imageId,initP,initR,initF,finalF,clicks,autoFlips
  std::string to_csv() const;
};

struct SimulateOptions {
  bool flip_dict_enabled = true;
  // Default: <workspace>/simulate.
  std::optional<std::filesystem::path> output_dir;
};

// Runs the oracle over every unannotated image that has a ground-truth
// mask, set by set in manifest order, starting each set from empty flip
// dictionaries (persisted workspace dictionaries are left alone).  Writes
// report.json, report.csv, masks/<imageId>.png and clicks/<imageId>.jsonl.
ExperimentReport simulate(Workspace& ws, const SimulateOptions& options);

struct Splits {
  int collect_a = 0;
  int collect_b = 0;
  int verify = 0;
};

struct EvolvabilityReport {
  std::string set_id;
  // Conditions with 0, 1 and 2 collection splits.
  std::vector<ExperimentReport> conditions;
  nlohmann::json to_json() const;
};

// Splits take images in manifest order.  Omitted splits default to thirds
// (verify takes the remainder).  Throws TooFewImages, InvalidParameter or
// MissingMask (an image without ground truth).
EvolvabilityReport run_evolvability(Workspace& ws, const std::string& set_id,
                                    std::optional<Splits> splits = std::nullopt);

// Scores <predictions_dir>/<imageId>.png against every ground-truth mask of
// the unannotated sets.  Missing predictions are listed, not scored.
nlohmann::json evaluate_predictions(Workspace& ws, const std::filesystem::path& predictions_dir);

}  // namespace maskforge
