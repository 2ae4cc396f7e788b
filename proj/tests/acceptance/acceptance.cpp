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

// Acceptance gate: one PASS/FAIL line per criterion; exits non-zero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "annotate.hpp"
#include "error.hpp"
#include "evaluate.hpp"
#include "experiment.hpp"
#include "image_io.hpp"
#include "oracles.hpp"
#include "retrieval.hpp"
#include "sparsecode.hpp"
#include "synth.hpp"
#include "workspace.hpp"

using namespace maskforge;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome omp_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  int exact = 0;
  double worst = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const int d = t % 2 ? 10 : 6;
    const int k = 1 + static_cast<int>(rng() % 5);
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    Dictionary dict(DictionaryKind::kWeak, d);
    for (int j = 0; j < d; ++j) {
      dict.add_atom({std::vector<double>(q.col(j).data(), q.col(j).data() + d), false},
                    {"s", std::to_string(j), 0});
    }
    std::vector<int> idx(d);
    for (int j = 0; j < d; ++j) idx[j] = j;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(k);
    std::vector<double> coef(d, 0.0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    for (int j : idx) {
      coef[j] = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
      x += coef[j] * q.col(j);
    }
    const auto code = omp_encode(dict, {std::vector<double>(x.data(), x.data() + d), false},
                                 {1e-8, 20});
    std::vector<int> sorted_support = code.support;
    std::sort(sorted_support.begin(), sorted_support.end());
    std::sort(idx.begin(), idx.end());
    bool ok = sorted_support == idx && code.coding_length == k && code.converged;
    for (std::size_t s = 0; ok && s < code.support.size(); ++s) {
      const double err = std::abs(code.coefficients[s] - coef[code.support[s]]);
      worst = std::max(worst, err);
      ok = err <= 1e-9;
    }
    exact += ok;
  }
  const double secs = seconds_since(t0);
  return {exact == trials && secs < 5.0,
          fmt("%d/%d exact, max coef err %.2e, %.3f s", exact, trials, worst, secs)};
}

Outcome tag_probability_suite() {
  std::mt19937_64 rng(17);
  int good = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng() % 30);
    std::vector<int> lengths(n);
    for (auto& l : lengths) l = static_cast<int>(rng() % 22);
    lengths[rng() % n] = 0;
    lengths[rng() % n] = 21;
    const auto p = tag_probabilities(lengths, 2.0);
    const int lo = *std::min_element(lengths.begin(), lengths.end());
    const int hi = *std::max_element(lengths.begin(), lengths.end());
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      const double expect = oracle::tag_probability(lengths, i, 2.0);
      worst = std::max(worst, std::abs(p[i] - expect));
      ok = ok && std::abs(p[i] - expect) <= 1e-12;
      if (lengths[i] == lo) ok = ok && std::abs(p[i] - 1.0) <= 1e-12;
      if (lengths[i] == hi) ok = ok && std::abs(p[i]) <= 1e-12;
      for (int j = 0; j < n; ++j) {
        if (lengths[i] < lengths[j]) ok = ok && p[i] >= p[j];
      }
    }
    good += ok;
  }
  return {good == 100, fmt("%d/100 lists, max err %.2e", good, worst)};
}

Outcome visual_identity() {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + static_cast<int>(rng() % 16);
    std::vector<FeatureVector> a, b;
    std::vector<std::vector<double>> ra, rb;
    auto fill = [&](std::vector<FeatureVector>& out, std::vector<std::vector<double>>& raw) {
      for (int i = 1 + static_cast<int>(rng() % 20); i > 0; --i) {
        std::vector<double> v(d);
        for (auto& x : v) x = n(rng);
        out.push_back(normalized(v));
        raw.push_back(out.back().values);
      }
    };
    fill(a, ra);
    fill(b, rb);
    std::vector<std::string> ia(a.size(), "a"), ib(b.size(), "b");
    const auto sa = make_set_record("a", {"x"}, ia, a, false);
    const auto sb = make_set_record("b", {"x"}, ib, b, false);
    worst = std::max(worst, std::abs(visual_similarity(sa, sb) - oracle::pairwise_visual(ra, rb)));
  }
  return {worst <= 1e-9, fmt("50 pairs, max err %.2e", worst)};
}

Outcome partition_invariants() {
  std::mt19937_64 rng(31);
  const Config cfg;
  long long violations = 0;
  for (int t = 0; t < 20; ++t) {
    synth::SceneOptions opt;
    opt.shape = static_cast<synth::Shape>(t % 3);
    const auto scene = synth::make_scene(rng, opt);
    const int px = static_cast<int>(scene.image.pixel_count());
    const auto coarse = segment_superpixels(
        scene.image, {std::min(cfg.coarse_regions, px / 4), cfg.compactness, cfg.slic_iterations,
                      static_cast<std::uint64_t>(t)},
        Scale::kCoarse);
    const auto raw = segment_superpixels(
        scene.image, {std::min(cfg.fine_regions, px / 4), cfg.compactness, cfg.slic_iterations,
                      static_cast<std::uint64_t>(t)},
        Scale::kFine);
    const auto fine = refine_partition(raw, coarse, cfg.min_region_pixels);
    violations += oracle::partition_violations(coarse);
    violations += oracle::partition_violations(raw);
    violations += oracle::partition_violations(fine);
    violations += oracle::refinement_violations(fine, coarse, raw);
  }
  return {violations == 0, fmt("20 images, %lld violations", violations)};
}

std::vector<ClickEvent> read_log(const fs::path& path) {
  std::vector<ClickEvent> log;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) log.push_back(click_from_json(nlohmann::json::parse(line)));
  }
  return log;
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  const auto data = synth::fresh_dir("accept_e2e_data");
  const auto root = synth::fresh_dir("accept_e2e_ws");
  init_workspace(synth::write_dataset(data, synth::object_dataset_spec(), 7), root);
  Workspace ws(root);
  const auto rep = simulate(ws, {});
  double min_f = 1.0;
  for (const auto& r : rep.per_image) min_f = std::min(min_f, r.final.f_measure);

  // Rebuild each baseline the way simulate does and replay the stored log.
  int replay_ok = 0;
  for (const auto& set : ws.manifest().sets) {
    if (set.annotated) continue;
    FlipDictionaries flips = ws.empty_flips(set.set_id);
    for (const auto& id : set.image_ids) {
      auto s = ws.start_session(id, &flips);
      const auto log = read_log(root / "simulate" / "clicks" / (id + ".jsonl"));
      const auto replayed = replay(s, log);
      const auto stored = load_mask(root / "simulate" / "masks" / (id + ".png"));
      replay_ok += export_mask(replayed) == stored;
      const auto& p = ws.prepare(id);
      record_flips(replayed, p.image, flips, ws.config().scales, ws.artifacts(set.set_id).pca);
    }
  }
  const int n = static_cast<int>(rep.per_image.size());
  const double secs = seconds_since(t0);
  return {n == 20 && min_f >= 0.93 && replay_ok == n && secs < 180.0,
          fmt("%d images, min F %.4f, %d/%d replays bit-exact, %.1f s", n, min_f, replay_ok, n,
              secs)};
}

Outcome evolvability() {
  const auto data = synth::fresh_dir("accept_evo_data");
  const auto root = synth::fresh_dir("accept_evo_ws");
  init_workspace(synth::write_dataset(data, synth::distractor_dataset_spec(), 7), root);
  Workspace ws(root);
  const auto rep = run_evolvability(ws, "patches", Splits{5, 5, 10});
  const auto& off = rep.conditions[0];
  const auto& two = rep.conditions[2];
  const double f_off = off.mean_init().f_measure;
  const double f_two = two.mean_init().f_measure;
  return {two.total_clicks() < off.total_clicks() && f_two >= f_off,
          fmt("clicks %d -> %d -> %d, init F %.4f -> %.4f -> %.4f", off.total_clicks(),
              rep.conditions[1].total_clicks(), two.total_clicks(), f_off,
              rep.conditions[1].mean_init().f_measure, f_two)};
}

Outcome metrics() {
  std::mt19937_64 rng(41);
  int good = 0;
  auto check = [&](const BitMask& pred, const BitMask& truth, double p, double r, double f) {
    const auto m = mask_metrics(pred, truth);
    good += m.precision == p && m.recall == r && m.f_measure == f;
  };
  const int w = 10, h = 10;
  BitMask empty(w, h), full(w, h, true), left(w, h), top(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      left.set(x, y, x < 5);
      top.set(x, y, y < 2);
    }
  // Hand-computed: P = tp/(tp+fp), R = tp/(tp+fn), F = 2PR/(P+R).
  check(full, full, 1.0, 1.0, 1.0);
  check(empty, empty, 0.0, 0.0, 0.0);   // both denominators zero
  check(empty, left, 0.0, 0.0, 0.0);    // no prediction
  check(left, empty, 0.0, 0.0, 0.0);    // no truth
  check(left, full, 1.0, 0.5, 2.0 * 1.0 * 0.5 / 1.5);
  check(full, left, 0.5, 1.0, 2.0 * 0.5 * 1.0 / 1.5);
  check(top, left, 0.5, 0.2, 2.0 * 0.5 * 0.2 / (0.5 + 0.2));  // tp 10, fp 10, fn 40
  check(left, top, 0.2, 0.5, 2.0 * 0.2 * 0.5 / (0.2 + 0.5));
  BitMask right(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 5; x < w; ++x) right.set(x, y, true);
  check(right, left, 0.0, 0.0, 0.0);
  // Random pair against plain counting.
  BitMask a(w, h), b(w, h);
  std::vector<int> va, vb;
  for (auto& v : a.mutable_bits()) va.push_back(v = rng() % 2);
  for (auto& v : b.mutable_bits()) vb.push_back(v = rng() % 2);
  const auto c = oracle::count_pixels(va, vb);
  const double p = static_cast<double>(c.tp) / (c.tp + c.fp);
  const double r = static_cast<double>(c.tp) / (c.tp + c.fn);
  check(a, b, p, r, 2.0 * p * r / (p + r));
  return {good == 10, fmt("%d/10 pairs exact", good)};
}

Outcome determinism() {
  const auto data = synth::fresh_dir("accept_det_data");
  const auto root = synth::fresh_dir("accept_det_ws");
  init_workspace(synth::write_dataset(data, synth::object_dataset_spec(), 11), root);
  auto run = [&](const char* name) {
    Workspace ws(root);
    SimulateOptions opt;
    opt.output_dir = root / name;
    simulate(ws, opt);
    std::map<std::string, std::vector<std::uint8_t>> files;
    for (const auto& e : fs::recursive_directory_iterator(root / name)) {
      if (e.is_regular_file()) {
        files[fs::relative(e.path(), root / name).string()] = read_file_bytes(e.path());
      }
    }
    return files;
  };
  const auto first = run("run1");
  const auto second = run("run2");
  return {first == second && first.count("report.json") && first.count("report.csv"),
          fmt("%zu files compared", first.size())};
}

}  // namespace

int main() {
  set_warnings_enabled(false);
  report("omp-oracle-equivalence", omp_oracle);
  report("tag-probability-endpoints-monotonicity", tag_probability_suite);
  report("visual-similarity-identity", visual_identity);
  report("partition-invariants", partition_invariants);
  report("end-to-end-oracle", end_to_end);
  report("evolvability", evolvability);
  report("metric-correctness", metrics);
  report("determinism", determinism);
  std::printf("%s: %d failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
