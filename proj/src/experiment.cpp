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

#include "experiment.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "error.hpp"
#include "image_io.hpp"

namespace maskforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
}

MaskMetrics mean_of(const std::vector<ImageOutcome>& rows, bool final) {
  MaskMetrics m;
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    const auto& x = final ? r.final : r.init;
    m.precision += x.precision;
    m.recall += x.recall;
    m.f_measure += x.f_measure;
    m.tp += x.tp;
    m.fp += x.fp;
    m.fn += x.fn;
  }
  const double n = static_cast<double>(rows.size());
  m.precision /= n;
  m.recall /= n;
  m.f_measure /= n;
  return m;
}

// One image through session creation, the oracle and (optionally) flip
// recording.
ImageOutcome run_image(Workspace& ws, const std::string& image_id, const BitMask& truth,
                       FlipDictionaries* flips, bool record, AnnotationSession* out) {
  AnnotationSession s = ws.start_session(image_id, flips);
  ImageOutcome o;
  o.image_id = image_id;
  o.auto_flips = static_cast<int>(s.auto_flipped().size());
  o.init = mask_metrics(export_mask(s), truth);
  const auto oracle = oracle_annotate(s, truth, ws.config().oracle_max_clicks);
  o.clicks = oracle.clicks;
  o.budget_exceeded = oracle.budget_exceeded;
  o.final = mask_metrics(export_mask(s), truth);
  if (record && flips) {
    const auto& p = ws.prepare(image_id);
    record_flips(s, p.image, *flips, ws.config().scales, ws.artifacts(p.set_id).pca);
  }
  if (out) *out = std::move(s);
  return o;
}

BitMask require_truth(Workspace& ws, const std::string& image_id) {
  auto truth = ws.truth_mask(image_id);
  if (!truth) throw Error(ErrorCode::kMissingMask, "image " + image_id + " has no ground truth");
  return std::move(*truth);
}

}  // namespace

int ExperimentReport::total_clicks() const {
  int total = 0;
  for (const auto& r : per_image) total += r.clicks;
  return total;
}

MaskMetrics ExperimentReport::mean_init() const { return mean_of(per_image, false); }
MaskMetrics ExperimentReport::mean_final() const { return mean_of(per_image, true); }

double ExperimentReport::mean_clicks() const {
  return per_image.empty() ? 0.0 : static_cast<double>(total_clicks()) / per_image.size();
}

double ExperimentReport::mean_auto_flips() const {
  if (per_image.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : per_image) total += r.auto_flips;
  return total / per_image.size();
}

json ExperimentReport::to_json() const {
  json rows = json::array();
  for (const auto& r : per_image) {
    rows.push_back({{"imageId", r.image_id},
                    {"initMetrics", maskforge::to_json(r.init)},
                    {"finalMetrics", maskforge::to_json(r.final)},
                    {"clickCount", r.clicks},
                    {"autoFlipCount", r.auto_flips},
                    {"budgetExceeded", r.budget_exceeded}});
  }
  const auto mi = mean_init();
  const auto mf = mean_final();
  return {{"condition", {{"flipDictEnabled", flip_dict_enabled}, {"splitLabel", split_label}}},
          {"perImage", rows},
          {"aggregates",
           {{"images", per_image.size()},
            {"initPrecision", mi.precision},
            {"initRecall", mi.recall},
            {"initF", mi.f_measure},
            {"finalPrecision", mf.precision},
            {"finalRecall", mf.recall},
            {"finalF", mf.f_measure},
            {"clicks", mean_clicks()},
            {"totalClicks", total_clicks()},
            {"autoFlips", mean_auto_flips()}}}};
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  out << "imageId,initP,initR,initF,finalF,clicks,autoFlips\n";
  out << std::setprecision(17);
  for (const auto& r : per_image) {
    out << r.image_id << ',' << r.init.precision << ',' << r.init.recall << ','
        << r.init.f_measure << ',' << r.final.f_measure << ',' << r.clicks << ','
        << r.auto_flips << '\n';
  }
  return out.str();
}

ExperimentReport simulate(Workspace& ws, const SimulateOptions& options) {
  const fs::path out_dir = options.output_dir.value_or(ws.root() / "simulate");
  ExperimentReport report;
  report.flip_dict_enabled = options.flip_dict_enabled;
  report.split_label = "all";
  for (const auto& set : ws.manifest().sets) {
    if (set.annotated) continue;
    FlipDictionaries flips = ws.empty_flips(set.set_id);
    for (const auto& id : set.image_ids) {
      auto truth = ws.truth_mask(id);
      if (!truth) {
        warn("image " + id + " has no ground truth, skipped");
        continue;
      }
      AnnotationSession s;
      report.per_image.push_back(run_image(ws, id, *truth,
                                           options.flip_dict_enabled ? &flips : nullptr,
                                           true, &s));
      save_mask_png(out_dir / "masks" / (id + ".png"), export_mask(s));
      std::string log;
      for (const auto& c : s.click_log()) log += to_json(c).dump() + "\n";
      write_text(out_dir / "clicks" / (id + ".jsonl"), log);
    }
  }
  write_text(out_dir / "report.json", report.to_json().dump(2) + "\n");
  write_text(out_dir / "report.csv", report.to_csv());
  return report;
}

json EvolvabilityReport::to_json() const {
  json conds = json::array();
  for (const auto& c : conditions) conds.push_back(c.to_json());
  return {{"setId", set_id}, {"conditions", conds}};
}

EvolvabilityReport run_evolvability(Workspace& ws, const std::string& set_id,
                                    std::optional<Splits> splits) {
  const SetEntry* set = ws.manifest().find_set(set_id);
  if (!set) throw Error(ErrorCode::kUnknownImage, "no set '" + set_id + "'");
  const int n = static_cast<int>(set->image_ids.size());
  if (n < 3) throw Error(ErrorCode::kTooFewImages, "evolvability needs at least 3 images");
  Splits sp;
  if (splits) {
    sp = *splits;
    if (sp.collect_a < 1 || sp.collect_b < 1 || sp.verify < 1 ||
        sp.collect_a + sp.collect_b + sp.verify > n) {
      throw Error(ErrorCode::kInvalidParameter, "splits must be positive and fit the set");
    }
  } else {
    sp = {n / 3, n / 3, n - 2 * (n / 3)};
  }
  const auto& ids = set->image_ids;
  const std::vector<std::vector<std::string>> collect = {
      {ids.begin(), ids.begin() + sp.collect_a},
      {ids.begin() + sp.collect_a, ids.begin() + sp.collect_a + sp.collect_b}};
  const std::vector<std::string> verify(ids.begin() + sp.collect_a + sp.collect_b,
                                        ids.begin() + sp.collect_a + sp.collect_b + sp.verify);

  std::map<std::string, BitMask> truths;
  for (const auto& id : ids) truths.emplace(id, require_truth(ws, id));

  EvolvabilityReport report;
  report.set_id = set_id;
  for (int k = 0; k <= 2; ++k) {
    FlipDictionaries flips = ws.empty_flips(set_id);
    for (int j = 0; j < k; ++j) {
      for (const auto& id : collect[j]) run_image(ws, id, truths.at(id), &flips, true, nullptr);
    }
    ExperimentReport cond;
    cond.flip_dict_enabled = k > 0;
    cond.split_label = "collect" + std::to_string(k);
    for (const auto& id : verify) {
      cond.per_image.push_back(
          run_image(ws, id, truths.at(id), k > 0 ? &flips : nullptr, false, nullptr));
    }
    report.conditions.push_back(std::move(cond));
  }
  return report;
}

json evaluate_predictions(Workspace& ws, const fs::path& predictions_dir) {
  if (!fs::is_directory(predictions_dir)) {
    throw Error(ErrorCode::kIoError, predictions_dir.string() + " is not a directory");
  }
  ExperimentReport report;
  report.split_label = "predictions";
  json missing = json::array();
  for (const auto& set : ws.manifest().sets) {
    if (set.annotated) continue;
    for (const auto& id : set.image_ids) {
      auto truth = ws.truth_mask(id);
      if (!truth) continue;
      const fs::path pred = predictions_dir / (id + ".png");
      if (!fs::exists(pred)) {
        missing.push_back(id);
        continue;
      }
      ImageOutcome o;
      o.image_id = id;
      o.final = mask_metrics(load_mask(pred), *truth);
      o.init = o.final;
      report.per_image.push_back(o);
    }
  }
  json rows = json::array();
  for (const auto& r : report.per_image) {
    rows.push_back({{"imageId", r.image_id}, {"metrics", to_json(r.final)}});
  }
  const auto mean = report.mean_final();
  return {{"perImage", rows},
          {"missing", missing},
          {"aggregates",
           {{"images", report.per_image.size()},
            {"precision", mean.precision},
            {"recall", mean.recall},
            {"fMeasure", mean.f_measure}}}};
}

}  // namespace maskforge
