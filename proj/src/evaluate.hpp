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

// Pixel metrics and the greedy oracle annotator.

#pragma once

#include <json.hpp>

#include "annotate.hpp"
#include "imaging.hpp"

namespace maskforge {

struct MaskMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

// P and R are 0 when their denominators are 0; F = 2PR/(P+R), 0 when
// P+R = 0.  Throws DimensionMismatch.
MaskMetrics mask_metrics(const BitMask& predicted, const BitMask& truth);

nlohmann::json to_json(const MaskMetrics& m);

struct OracleResult {
  int clicks = 0;
  bool budget_exceeded = false;
  double initial_f = 0.0;
  double final_f = 0.0;
};

// Coarse regions whose truth overlap fraction lies strictly inside this
// band are only offered the divide-then-fix action.
inline constexpr double kDivideBandLow = 0.2;
inline constexpr double kDivideBandHigh = 0.8;

// Greedy simulated annotator.  Each step takes the action with the largest
// strict F gain (ties: lowest region id): a flip of an active region, or for
// ambiguous coarse regions a divide followed by flips of the children whose
// label disagrees with their truth majority.  Stops when nothing improves F
// or the next action would exceed `max_clicks` (budget_exceeded is then
// set).  Click timestamps count up from `first_timestamp`.  Seals the
// session.  Throws DimensionMismatch.
OracleResult oracle_annotate(AnnotationSession& session, const BitMask& truth,
                             int max_clicks, long long first_timestamp = 0);

}  // namespace maskforge
