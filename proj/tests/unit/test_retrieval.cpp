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

#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "error.hpp"
#include "image_io.hpp"
#include "oracles.hpp"
#include "retrieval.hpp"
#include "synth.hpp"

using namespace maskforge;

namespace {

FeatureVector unit(std::vector<double> v) { return normalized(std::move(v)); }

EmbeddingTable table_of(const std::string& text) {
  std::istringstream in(text);
  return parse_embeddings(in);
}

ImageSetRecord record(const std::string& id, std::vector<std::string> tags,
                      std::vector<FeatureVector> feats, bool masks = false) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < feats.size(); ++i) ids.push_back(id + "_" + std::to_string(i));
  return make_set_record(id, std::move(tags), std::move(ids), feats, masks);
}

PcaModel identity_pca(int dims) {
  PcaModel m;
  m.input_dims = dims;
  m.output_dims = dims;
  m.mean = Eigen::VectorXd::Zero(dims);
  m.basis = Eigen::MatrixXd::Identity(dims, dims);
  m.explained_variance = Eigen::VectorXd::Ones(dims);
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kPipelineFailure;
}

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("linguistic similarity") {
  const auto t = table_of("t 1 0 0\nu 0 1 0\nv 0.5 0.3 0.8124038404635961\n");
  const std::vector<std::string> a{"t"}, b{"u"}, ab{"t", "u"}, c{"v"};
  CHECK(linguistic_similarity(a, a, t) == doctest::Approx(1.0));
  CHECK(linguistic_similarity(a, b, t) == 0.0);
  // cos(t, v) = 0.5 and cos(u, v) = 0.3, averaged.
  CHECK(linguistic_similarity(ab, c, t) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(code_of([&] { linguistic_similarity({}, c, t); }) == ErrorCode::kEmptyTagList);
}

TEST_CASE("visual similarity") {
  const auto e0 = unit({1, 0}), e1 = unit({0, 1});
  const auto one = record("one", {"x"}, {e0});
  CHECK(visual_similarity(one, one) == doctest::Approx(1.0));
  CHECK(visual_similarity(record("a", {"x"}, {e0}), record("b", {"x"}, {e1})) == 0.0);
  const auto ab = record("ab", {"x"}, {e0, e1});
  CHECK(visual_similarity(ab, one) == doctest::Approx(0.5).epsilon(1e-15));
  const std::vector<FeatureVector> fa{e0, e1}, fb{e0};
  CHECK(visual_similarity(fa, fb) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("visual similarity equals the pairwise mean on random sets") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 20);
  for (int t = 0; t < 20; ++t) {
    const int dims = 2 + t % 15;
    std::vector<FeatureVector> a, b;
    std::vector<std::vector<double>> ra, rb;
    for (int i = size(rng); i > 0; --i) {
      std::vector<double> v(dims);
      for (auto& x : v) x = n(rng);
      a.push_back(unit(v));
      ra.push_back(a.back().values);
    }
    for (int i = size(rng); i > 0; --i) {
      std::vector<double> v(dims);
      for (auto& x : v) x = n(rng);
      b.push_back(unit(v));
      rb.push_back(b.back().values);
    }
    const double expect = oracle::pairwise_visual(ra, rb);
    CHECK(visual_similarity(a, b) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(visual_similarity(record("a", {"x"}, a), record("b", {"x"}, b)) ==
          doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("set similarity") {
  for (double s : {0.1, 0.5, 0.97, 1.0}) CHECK(set_similarity(s, s) == doctest::Approx(s));
  CHECK(set_similarity(0.0, 1.0) == 0.0);
  CHECK(set_similarity(0.8, 0.4) == doctest::Approx(0.64 / 1.2).epsilon(1e-15));
  CHECK(set_similarity(0.8, 0.4) == set_similarity(0.4, 0.8));
  CHECK(set_similarity(0.0, 0.0) == 0.0);
  CHECK(set_similarity(-0.5, 0.7) == 0.0);
}

TEST_CASE("related set selection") {
  // Each candidate gets linguistic and visual similarity s, so the combined score is s.
  std::string emb = "q 1 0\n";
  std::vector<ImageSetRecord> corpus;
  const std::vector<std::pair<std::string, double>> wanted{
      {"low", 0.2}, {"high", 0.97}, {"mid", 0.96}};
  for (const auto& [id, s] : wanted) {
    const double c = std::sqrt(1.0 - s * s);
    std::ostringstream line;
    line.precision(17);
    line << id << "tag " << s << ' ' << c << '\n';
    emb += line.str();
    corpus.push_back(record(id, {id + "tag"}, {FeatureVector{{s, c}, false}}));
  }
  const auto table = table_of(emb);
  const auto query = record("query", {"q"}, {unit({1, 0})});
  const auto ranked = select_related_sets(query, corpus, table, 0.95, 5);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].set->set_id == "high");
  CHECK(ranked[0].similarity == doctest::Approx(0.97).epsilon(1e-12));
  CHECK(ranked[1].set->set_id == "mid");

  // Nothing passes: fall back to the top-k ordered by similarity then id.
  const auto fallback = select_related_sets(query, corpus, table, 0.99, 2);
  REQUIRE(fallback.size() == 2);
  CHECK(fallback[0].set->set_id == "high");

  std::vector<ImageSetRecord> zeros;
  for (const char* id : {"f", "b", "d", "a", "e", "c", "g"}) {
    zeros.push_back(record(id, {"q"}, {unit({0, 1})}));
  }
  const auto z = select_related_sets(query, zeros, table);
  REQUIRE(z.size() == 5);
  CHECK(z[0].set->set_id == "a");
  CHECK(z[4].set->set_id == "e");

  // A clone of the query scores 1.
  std::vector<ImageSetRecord> clone{record("clone", {"q"}, {unit({1, 0})})};
  const auto c = select_related_sets(query, clone, table);
  REQUIRE(c.size() == 1);
  CHECK(c[0].similarity == doctest::Approx(1.0));
}

TEST_CASE("weak dictionaries") {
  const auto pca = identity_pca(3);
  std::vector<FeatureItem> items{{"s1", "a", unit({1, 0, 0})},
                                 {"s1", "b", unit({0, 1, 0})},
                                 {"s2", "c", unit({0, 0, 1})},
                                 {"s2", "d", unit({1, 1, 0})},
                                 {"s2", "e", unit({1, 1, 1})}};
  const auto three = build_weak_dictionary(std::span(items).first(3), pca);
  CHECK(three.size() == 3);
  const auto five = build_weak_dictionary(items, pca);
  CHECK(five.size() == 5);
  CHECK(five.kind() == DictionaryKind::kWeak);
  CHECK(five.provenance()[1].set_id == "s1");
  CHECK(five.provenance()[2].set_id == "s2");
  for (int k = 0; k < five.size(); ++k) CHECK(five.atom(k).norm() == doctest::Approx(1.0));

  items.push_back({"s3", "zero", FeatureVector{{0, 0, 0}, false}});
  set_warnings_enabled(false);
  CHECK(build_weak_dictionary(items, pca).size() == 5);
  std::vector<FeatureItem> only_zero{items.back()};
  CHECK(code_of([&] { build_weak_dictionary(only_zero, pca); }) == ErrorCode::kEmptyDictionary);
  set_warnings_enabled(true);
}

TEST_CASE("strong dictionaries") {
  std::mt19937_64 rng(6);
  const auto s1 = synth::make_scene(rng, {});
  const auto s2 = synth::make_scene(rng, {});
  const BitMask full(96, 96, true);
  const auto obj = describe_masked_object(s1.image, full);
  const auto whole = describe_image(s1.image);
  CHECK(obj.values == whole.values);

  const auto pca = identity_pca(kDescriptorDims);
  std::vector<MaskedImage> items{{"ref", "a", &s1.image, &s1.truth},
                                 {"ref", "b", &s2.image, &s2.truth}};
  const auto d = build_strong_dictionary(items, pca);
  CHECK(d.size() == 2);
  CHECK(d.kind() == DictionaryKind::kStrong);
  CHECK(d.provenance()[1] == AtomProvenance{"ref", "b", 0});

  const BitMask empty(96, 96);
  items.push_back({"ref", "c", &s2.image, &empty});
  set_warnings_enabled(false);
  CHECK(build_strong_dictionary(items, pca).size() == 2);
  set_warnings_enabled(true);
}

TEST_CASE("default projection size") {
  CHECK(default_pca_dims(500, 84) == 84);
  CHECK(default_pca_dims(30, 84) == 29);
  CHECK(default_pca_dims(1, 84) == 1);
  CHECK(default_pca_dims(500, 200) == 100);
}

TEST_CASE("dictionary and pca persistence") {
  const auto dir = synth::fresh_dir("retrieval_io");
  Dictionary d(DictionaryKind::kFlipPos, 3);
  d.add_atom(unit({1, 2, 3}), {"s", "img_1/4", 2});
  d.add_atom(unit({-1, 0, 3}), {"s", "img_2/0", 1});
  save_dictionary(dir / "flipPos", d);
  const auto back = load_dictionary(dir / "flipPos");
  CHECK(back.kind() == DictionaryKind::kFlipPos);
  CHECK(back.provenance() == d.provenance());
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 3; ++i) {
      // Atoms are stored as float32.
      CHECK(back.atom(k).values[i] == doctest::Approx(d.atom(k).values[i]).epsilon(1e-6));
    }
  }
  const auto bytes = read_file_bytes(dir / "flipPos.mfv");
  save_dictionary(dir / "again", back);
  CHECK(read_file_bytes(dir / "again.mfv") == bytes);

  std::vector<FeatureVector> xs{unit({1, 2, 0}), unit({0, 1, 1}), unit({3, 0, 1}),
                                unit({1, 1, 1})};
  const auto pca = fit_pca(xs, 2);
  save_pca(dir / "pca.json", pca);
  const auto p2 = load_pca(dir / "pca.json");
  CHECK(p2.output_dims == 2);
  CHECK((p2.basis - pca.basis).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(code_of([&] { load_pca(dir / "missing.json"); }) == ErrorCode::kUnreadableFile);
}

}  // TEST_SUITE
