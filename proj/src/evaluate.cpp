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

#include "evaluate.hpp"

#include <vector>

#include "error.hpp"

namespace maskforge {

namespace {

constexpr double kGainTolerance = 1e-12;

double f_from_counts(long long tp, long long predicted, long long truth) {
  const long long denom = predicted + truth;
  return (tp > 0 && denom > 0) ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom)
                               : 0.0;
}

struct Counts {
  long long tp = 0;
  long long predicted = 0;
};

struct Action {
  int target = -1;
  bool divide = false;
  std::vector<int> child_flips;
  Counts after;
  double gain = 0.0;
  int clicks() const { return 1 + static_cast<int>(child_flips.size()); }
};

}  // namespace

MaskMetrics mask_metrics(const BitMask& predicted, const BitMask& truth) {
  if (predicted.width() != truth.width() || predicted.height() != truth.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "predicted and truth masks differ in size");
  }
  MaskMetrics m;
  const auto p = predicted.bits();
  const auto t = truth.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && t[i]) ++m.tp;
    else if (p[i]) ++m.fp;
    else if (t[i]) ++m.fn;
  }
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision + m.recall > 0.0) {
    m.f_measure = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

nlohmann::json to_json(const MaskMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"fMeasure", m.f_measure},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn}};
}

OracleResult oracle_annotate(AnnotationSession& session, const BitMask& truth,
                             int max_clicks, long long first_timestamp) {
  const auto& coarse = session.coarse();
  const auto& fine = session.fine();
  if (truth.width() != coarse.width() || truth.height() != coarse.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "truth mask differs from image size");
  }
  const int rc = session.coarse_count();
  const int total_ids = rc + fine.region_count();
  std::vector<long long> overlap(total_ids, 0);
  const auto tb = truth.bits();
  const auto cl = coarse.labels();
  const auto fl = fine.labels();
  long long truth_count = 0;
  for (std::size_t i = 0; i < tb.size(); ++i) {
    if (!tb[i]) continue;
    ++truth_count;
    ++overlap[cl[i]];
    ++overlap[rc + fl[i]];
  }

  const auto initial = mask_metrics(export_mask(session), truth);
  Counts cur{initial.tp, initial.tp + initial.fp};
  OracleResult result;
  result.initial_f = initial.f_measure;

  auto flip_counts = [&](Counts c, int id, int label) {
    const long long n = session.pixel_count(id);
    if (label == 1) {
      c.tp -= overlap[id];
      c.predicted -= n;
    } else {
      c.tp += overlap[id];
      c.predicted += n;
    }
    return c;
  };

  long long ts = first_timestamp;
  while (true) {
    const double f_now = f_from_counts(cur.tp, cur.predicted, truth_count);
    Action best;
    for (int id : session.active_regions()) {
      Action a;
      a.target = id;
      const int lbl = session.label(id);
      if (session.is_coarse(id)) {
        const double frac = static_cast<double>(overlap[id]) /
                            static_cast<double>(session.pixel_count(id));
        if (frac > kDivideBandLow && frac < kDivideBandHigh) {
          a.divide = true;
          a.after = cur;
          for (int child : session.children(id)) {
            const int want = 2 * overlap[child] > session.pixel_count(child) ? 1 : 0;
            if (want != lbl) {
              a.child_flips.push_back(child);
              a.after = flip_counts(a.after, child, lbl);
            }
          }
        } else {
          a.after = flip_counts(cur, id, lbl);
        }
      } else {
        a.after = flip_counts(cur, id, lbl);
      }
      a.gain = f_from_counts(a.after.tp, a.after.predicted, truth_count) - f_now;
      if (a.gain > kGainTolerance && a.gain > best.gain + kGainTolerance) best = std::move(a);
    }
    if (best.target < 0) break;
    if (result.clicks + best.clicks() > max_clicks) {
      result.budget_exceeded = true;
      break;
    }
    if (best.divide) {
      session.apply_click({ClickKind::kRightDivide, best.target, ts++, 0});
      for (int child : best.child_flips) {
        session.apply_click({ClickKind::kLeftFlip, child, ts++, 0});
      }
    } else {
      session.apply_click({ClickKind::kLeftFlip, best.target, ts++, 0});
    }
    result.clicks += best.clicks();
    cur = best.after;
  }
  result.final_f = f_from_counts(cur.tp, cur.predicted, truth_count);
  session.seal();
  return result;
}

}  // namespace maskforge
