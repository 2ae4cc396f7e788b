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

#include "workspace.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "error.hpp"
#include "image_io.hpp"
#include "proposals.hpp"
#include "retrieval.hpp"

namespace maskforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(code, path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

[[noreturn]] void invalid_manifest(const std::string& msg) {
  throw Error(ErrorCode::kManifestInvalid, msg);
}

fs::path set_dir(const fs::path& root, const std::string& set_id) {
  return root / "sets" / set_id;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidParameter, "config: " + what);
}

}  // namespace

// --- Config -----------------------------------------------------------------

void Config::validate() const {
  require(beta0 >= 0.0 && beta0 <= 1.0, "beta0 must lie in [0, 1]");
  require(delta_beta >= 0.0 && delta_beta <= 1.0, "deltaBeta must lie in [0, 1]");
  require(beta1 >= 0.0 && beta1 <= 1.0, "beta1 must lie in [0, 1]");
  require(epsilon > 0.0, "epsilon must be positive");
  require(q > 0.0, "q must be positive");
  require(max_proposals >= 1, "maxProposals must be >= 1");
  require(scales >= 1, "scales must be >= 1");
  require(coarse_regions >= 2, "coarseRegions must be >= 2");
  require(fine_regions >= coarse_regions, "fineRegions must be >= coarseRegions");
  require(max_atoms >= 1, "maxAtoms must be >= 1");
  require(related_threshold >= 0.0 && related_threshold <= 1.0,
          "relatedThreshold must lie in [0, 1]");
  require(fallback_sets >= 1, "fallbackSets must be >= 1");
  require(compactness > 0.0, "compactness must be positive");
  require(slic_iterations >= 1, "slicIterations must be >= 1");
  require(min_region_pixels >= 1, "minRegionPixels must be >= 1");
  require(oracle_max_clicks >= 0, "oracleMaxClicks must be >= 0");
}

json Config::to_json() const {
  return {{"beta0", beta0},
          {"deltaBeta", delta_beta},
          {"beta1", beta1},
          {"epsilon", epsilon},
          {"q", q},
          {"maxProposals", max_proposals},
          {"scales", scales},
          {"coarseRegions", coarse_regions},
          {"fineRegions", fine_regions},
          {"maxAtoms", max_atoms},
          {"relatedThreshold", related_threshold},
          {"fallbackSets", fallback_sets},
          {"compactness", compactness},
          {"slicIterations", slic_iterations},
          {"seed", seed},
          {"minRegionPixels", min_region_pixels},
          {"oracleMaxClicks", oracle_max_clicks}};
}

void Config::merge(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidParameter, "config must be an object");
  Config next = *this;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "beta0") next.beta0 = value.get<double>();
      else if (key == "deltaBeta") next.delta_beta = value.get<double>();
      else if (key == "beta1") next.beta1 = value.get<double>();
      else if (key == "epsilon") next.epsilon = value.get<double>();
      else if (key == "q") next.q = value.get<double>();
      else if (key == "maxProposals") next.max_proposals = value.get<int>();
      else if (key == "scales") next.scales = value.get<int>();
      else if (key == "coarseRegions") next.coarse_regions = value.get<int>();
      else if (key == "fineRegions") next.fine_regions = value.get<int>();
      else if (key == "maxAtoms") next.max_atoms = value.get<int>();
      else if (key == "relatedThreshold") next.related_threshold = value.get<double>();
      else if (key == "fallbackSets") next.fallback_sets = value.get<int>();
      else if (key == "compactness") next.compactness = value.get<double>();
      else if (key == "slicIterations") next.slic_iterations = value.get<int>();
      else if (key == "seed") next.seed = value.get<std::uint64_t>();
      else if (key == "minRegionPixels") next.min_region_pixels = value.get<int>();
      else if (key == "oracleMaxClicks") next.oracle_max_clicks = value.get<int>();
      else throw Error(ErrorCode::kInvalidParameter, "config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidParameter, std::string("config: ") + e.what());
  }
  next.validate();
  *this = next;
}

Config load_config(const fs::path& root) {
  Config cfg;
  const fs::path local = root / "config.json";
  if (fs::exists(local)) cfg.merge(read_json_file(local, ErrorCode::kInvalidParameter));
  if (const char* env = std::getenv("MASKFORGE_CONFIG"); env && *env) {
    cfg.merge(read_json_file(env, ErrorCode::kInvalidParameter));
  }
  cfg.validate();
  return cfg;
}

// --- Manifest ---------------------------------------------------------------

const SetEntry* Manifest::find_set(const std::string& id) const {
  for (const auto& s : sets) {
    if (s.set_id == id) return &s;
  }
  return nullptr;
}

const ImageEntry* Manifest::find_image(const std::string& id) const {
  for (const auto& i : images) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

json Manifest::to_json() const {
  json out;
  if (embeddings) out["embeddings"] = embeddings->string();
  if (feature_file) out["featureFile"] = feature_file->string();
  out["sets"] = json::array();
  for (const auto& s : sets) {
    json images = json::array();
    for (const auto& id : s.image_ids) {
      const auto& e = *find_image(id);
      json img = {{"id", e.id}, {"path", e.path.string()}};
      if (e.mask_path) img["maskPath"] = e.mask_path->string();
      if (e.feature_id) img["featureId"] = *e.feature_id;
      if (e.proposals_path) img["proposalsPath"] = e.proposals_path->string();
      images.push_back(img);
    }
    out["sets"].push_back(
        {{"setId", s.set_id}, {"tags", s.tags}, {"annotated", s.annotated}, {"images", images}});
  }
  return out;
}

Manifest parse_manifest(const json& doc, const fs::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::absolute(base_dir / path).lexically_normal();
  };
  Manifest m;
  try {
    if (!doc.is_object() || !doc.contains("sets") || !doc["sets"].is_array()) {
      invalid_manifest("manifest needs a 'sets' array");
    }
    if (doc.contains("embeddings")) m.embeddings = resolve(doc["embeddings"].get<std::string>());
    if (doc.contains("featureFile")) m.feature_file = resolve(doc["featureFile"].get<std::string>());
    std::set<std::string> set_ids;
    std::set<std::string> image_ids;
    for (const auto& s : doc["sets"]) {
      SetEntry set;
      set.set_id = s.at("setId").get<std::string>();
      if (set.set_id.empty() || set.set_id.find_first_of("/\\") != std::string::npos ||
          set.set_id == "." || set.set_id == "..") {
        invalid_manifest("invalid setId '" + set.set_id + "'");
      }
      if (!set_ids.insert(set.set_id).second) invalid_manifest("duplicate setId " + set.set_id);
      set.tags = s.at("tags").get<std::vector<std::string>>();
      if (set.tags.empty()) invalid_manifest("set " + set.set_id + " has no tags");
      set.annotated = s.value("annotated", false);
      const auto& images = s.at("images");
      if (!images.is_array() || images.empty()) {
        invalid_manifest("set " + set.set_id + " has no images");
      }
      for (const auto& i : images) {
        ImageEntry e;
        e.id = i.at("id").get<std::string>();
        if (e.id.empty() || e.id.find_first_of("/\\") != std::string::npos || e.id == "." ||
            e.id == "..") {
          invalid_manifest("invalid image id '" + e.id + "'");
        }
        if (!image_ids.insert(e.id).second) invalid_manifest("duplicate image id " + e.id);
        e.set_id = set.set_id;
        e.path = resolve(i.at("path").get<std::string>());
        if (i.contains("maskPath")) e.mask_path = resolve(i["maskPath"].get<std::string>());
        if (i.contains("featureId")) e.feature_id = i["featureId"].get<std::string>();
        if (i.contains("proposalsPath")) {
          e.proposals_path = resolve(i["proposalsPath"].get<std::string>());
        }
        if (set.annotated && !e.mask_path) {
          invalid_manifest("annotated image " + e.id + " has no maskPath");
        }
        set.image_ids.push_back(e.id);
        m.images.push_back(std::move(e));
      }
      m.sets.push_back(std::move(set));
    }
  } catch (const json::exception& e) {
    invalid_manifest(e.what());
  }
  if (m.sets.empty()) invalid_manifest("manifest has no sets");
  return m;
}

Manifest load_manifest(const fs::path& path) {
  const json doc = read_json_file(path, ErrorCode::kManifestInvalid);
  return parse_manifest(doc, fs::absolute(path).parent_path());
}

// --- init -------------------------------------------------------------------

namespace {

struct LoadedSet {
  const SetEntry* entry = nullptr;
  std::vector<RasterImage> images;
  std::vector<BitMask> masks;  // annotated sets only
  std::vector<FeatureVector> visual;
};

}  // namespace

InitSummary init_workspace(const fs::path& manifest_path, const fs::path& workspace_dir) {
  const Manifest manifest = load_manifest(manifest_path);
  EmbeddingTable table;
  if (manifest.embeddings) table = load_embeddings(*manifest.embeddings);
  std::map<std::string, FeatureVector> external;
  if (manifest.feature_file) {
    for (auto& r : read_feature_file(*manifest.feature_file)) {
      external[r.id] = std::move(r.vector);
    }
  }

  std::vector<LoadedSet> loaded;
  for (const auto& s : manifest.sets) {
    LoadedSet ls;
    ls.entry = &s;
    for (const auto& id : s.image_ids) {
      const auto& e = *manifest.find_image(id);
      ls.images.push_back(load_image(e.path));
      if (s.annotated) {
        ls.masks.push_back(load_mask(*e.mask_path));
        if (ls.masks.back().width() != ls.images.back().width() ||
            ls.masks.back().height() != ls.images.back().height()) {
          invalid_manifest("mask of " + id + " does not match its image");
        }
      }
      if (manifest.feature_file) {
        const std::string key = e.feature_id.value_or(e.id);
        auto it = external.find(key);
        if (it == external.end()) {
          throw Error(ErrorCode::kMissingFeatures, "no feature record '" + key + "'");
        }
        ls.visual.push_back(it->second);
      } else {
        ls.visual.push_back(describe_image(ls.images.back()));
      }
    }
    loaded.push_back(std::move(ls));
  }
  if (manifest.feature_file) {
    const int dims = loaded.front().visual.front().dims();
    for (const auto& ls : loaded) {
      for (const auto& v : ls.visual) {
        if (v.dims() != dims) {
          throw Error(ErrorCode::kDimensionMismatch, "feature records differ in width");
        }
      }
    }
  }

  std::vector<ImageSetRecord> records;
  for (const auto& ls : loaded) {
    records.push_back(make_set_record(ls.entry->set_id, ls.entry->tags, ls.entry->image_ids,
                                      ls.visual, ls.entry->annotated));
  }

  std::error_code ec;
  fs::create_directories(workspace_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + workspace_dir.string());
  write_text_file(workspace_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  if (!fs::exists(workspace_dir / "config.json")) {
    write_text_file(workspace_dir / "config.json", Config{}.to_json().dump(2) + "\n");
  }
  const Config cfg = load_config(workspace_dir);

  InitSummary summary;
  for (std::size_t qi = 0; qi < loaded.size(); ++qi) {
    const auto& query = loaded[qi];
    if (query.entry->annotated) continue;
    ++summary.query_sets;
    const auto related = select_related_sets(records[qi], records, table,
                                             cfg.related_threshold, cfg.fallback_sets);
    // Weak atoms: whole-image descriptors of the query set and of related
    // unannotated sets.  Strong atoms: object descriptors of related
    // annotated sets.
    std::vector<FeatureItem> weak_items;
    std::vector<MaskedImage> strong_items;
    auto add_weak = [&](const LoadedSet& ls) {
      for (std::size_t k = 0; k < ls.images.size(); ++k) {
        weak_items.push_back({ls.entry->set_id, ls.entry->image_ids[k], describe_image(ls.images[k])});
      }
    };
    add_weak(query);
    for (const auto& r : related) {
      const auto it = std::find_if(loaded.begin(), loaded.end(), [&](const LoadedSet& ls) {
        return ls.entry->set_id == r.set->set_id;
      });
      if (it->entry->annotated) {
        for (std::size_t k = 0; k < it->images.size(); ++k) {
          strong_items.push_back(
              {it->entry->set_id, it->entry->image_ids[k], &it->images[k], &it->masks[k]});
        }
      } else {
        add_weak(*it);
      }
    }
    if (strong_items.empty()) {
      warn("set " + query.entry->set_id + ": no related annotated set, weak dictionary only");
    }
    const auto strong_feats = strong_object_features(strong_items);
    std::vector<FeatureVector> samples;
    for (const auto& w : weak_items) samples.push_back(w.feature);
    for (const auto& s : strong_feats) samples.push_back(s.feature);
    const PcaModel pca = fit_pca(samples, default_pca_dims(samples.size(), kDescriptorDims));

    const fs::path dir = set_dir(workspace_dir, query.entry->set_id);
    fs::create_directories(dir, ec);
    save_pca(dir / "pca.json", pca);
    const Dictionary weak = build_dictionary(DictionaryKind::kWeak, weak_items, pca);
    save_dictionary(dir / "weak", weak);
    summary.weak_atoms += weak.size();
    fs::remove(dir / "strong.mfv", ec);
    fs::remove(dir / "strong.json", ec);
    if (!strong_feats.empty()) {
      const Dictionary strong = build_dictionary(DictionaryKind::kStrong, strong_feats, pca);
      save_dictionary(dir / "strong", strong);
      summary.strong_atoms += strong.size();
    }
    const FlipDictionaries flips(pca.output_dims, cfg.scales);
    save_dictionary(dir / "flipPos", flips.pos);
    save_dictionary(dir / "flipNeg", flips.neg);
  }
  return summary;
}

// --- Workspace --------------------------------------------------------------

Workspace::Workspace(fs::path root) : root_(std::move(root)) {
  if (!fs::is_directory(root_)) {
    throw Error(ErrorCode::kIoError, "workspace " + root_.string() + " does not exist");
  }
  const fs::path manifest_path = root_ / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::kIoError, "workspace " + root_.string() + " has no manifest.json");
  }
  manifest_ = load_manifest(manifest_path);
  config_ = load_config(root_);
}

void Workspace::set_config(Config config) {
  config.validate();
  config_ = config;
  prepared_.clear();
  for (auto& [id, art] : artifacts_) art->flips.min_atoms_to_activate = config_.scales;
}

const ImageEntry& Workspace::image(const std::string& image_id) const {
  const ImageEntry* e = manifest_.find_image(image_id);
  if (!e) throw Error(ErrorCode::kUnknownImage, "no image '" + image_id + "'");
  return *e;
}

std::optional<BitMask> Workspace::truth_mask(const std::string& image_id) const {
  const auto& e = image(image_id);
  if (!e.mask_path) return std::nullopt;
  return load_mask(*e.mask_path);
}

SetArtifacts& Workspace::artifacts(const std::string& set_id) {
  if (auto it = artifacts_.find(set_id); it != artifacts_.end()) return *it->second;
  const fs::path dir = set_dir(root_, set_id);
  if (!fs::exists(dir / "pca.json")) {
    throw Error(ErrorCode::kUnknownImage, "set '" + set_id + "' has no dictionaries");
  }
  PcaModel pca = load_pca(dir / "pca.json");
  auto art = std::make_unique<SetArtifacts>(
      SetArtifacts{pca, std::nullopt, std::nullopt, FlipDictionaries(pca.output_dims, config_.scales)});
  if (fs::exists(dir / "weak.json")) art->weak = load_dictionary(dir / "weak");
  if (fs::exists(dir / "strong.json")) art->strong = load_dictionary(dir / "strong");
  if (!art->weak && !art->strong) {
    throw Error(ErrorCode::kEmptyDictionary, "set '" + set_id + "' has no dictionaries");
  }
  if (fs::exists(dir / "flipPos.json")) art->flips.pos = load_dictionary(dir / "flipPos");
  if (fs::exists(dir / "flipNeg.json")) art->flips.neg = load_dictionary(dir / "flipNeg");
  auto& ref = *art;
  artifacts_[set_id] = std::move(art);
  return ref;
}

void Workspace::save_flips(const std::string& set_id) {
  const auto& art = artifacts(set_id);
  const fs::path dir = set_dir(root_, set_id);
  save_dictionary(dir / "flipPos", art.flips.pos);
  save_dictionary(dir / "flipNeg", art.flips.neg);
}

FlipDictionaries Workspace::empty_flips(const std::string& set_id) {
  return FlipDictionaries(artifacts(set_id).pca.output_dims, config_.scales);
}

const PreparedImage& Workspace::prepare(const std::string& image_id) {
  if (auto it = prepared_.find(image_id); it != prepared_.end()) return *it->second;
  const auto& entry = image(image_id);
  auto& art = artifacts(entry.set_id);
  auto p = std::make_unique<PreparedImage>();
  p->image_id = entry.id;
  p->set_id = entry.set_id;
  p->image = load_image(entry.path);
  const auto pixels = static_cast<int>(p->image.pixel_count());
  SlicParams coarse_params{std::min(config_.coarse_regions, pixels / 4), config_.compactness,
                           config_.slic_iterations, config_.seed};
  SlicParams fine_params{std::min(config_.fine_regions, pixels / 4), config_.compactness,
                         config_.slic_iterations, config_.seed};
  p->coarse = segment_superpixels(p->image, coarse_params, Scale::kCoarse);
  const auto raw_fine = segment_superpixels(p->image, fine_params, Scale::kFine);
  p->fine = refine_partition(raw_fine, p->coarse, config_.min_region_pixels);

  std::vector<ObjectProposal> proposals;
  if (entry.proposals_path) {
    proposals = load_proposals(*entry.proposals_path, p->image.width(), p->image.height());
  } else {
    ProposalParams pp;
    pp.max_count = config_.max_proposals;
    proposals = generate_proposals(p->image, p->fine, pp);
  }
  if (!proposals.empty()) {
    ScoringContext ctx;
    ctx.weak = art.weak ? &*art.weak : nullptr;
    ctx.strong = art.strong ? &*art.strong : nullptr;
    ctx.pca = &art.pca;
    ctx.omp = config_.omp();
    ctx.q = config_.q;
    score_proposals(proposals, p->image, ctx);
  }
  p->probabilities = superpixel_probability(p->coarse, proposals);
  auto& ref = *p;
  prepared_[image_id] = std::move(p);
  return ref;
}

AnnotationSession Workspace::start_session(const std::string& image_id,
                                           const FlipDictionaries* flips) {
  const auto& p = prepare(image_id);
  AnnotationSession s(p.image_id, p.coarse, p.fine, p.probabilities,
                      initialize_labels(p.probabilities, config_.beta0));
  if (flips) auto_refine(s, p.image, *flips, config_.refine(), artifacts(p.set_id).pca);
  return s;
}

fs::path Workspace::session_path(const std::string& id) const {
  return root_ / "sessions" / (id + ".json");
}

void Workspace::persist(const AnnotationSession& s) const {
  write_text_file(session_path(s.image_id()), s.to_json().dump() + "\n");
}

const AnnotationSession& Workspace::create_session(const std::string& image_id) {
  const auto& entry = image(image_id);
  if (sessions_.count(image_id) || fs::exists(session_path(image_id))) {
    throw Error(ErrorCode::kSessionExists, "session '" + image_id + "' already exists");
  }
  AnnotationSession s;
  try {
    s = start_session(entry.id, &artifacts(entry.set_id).flips);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnknownImage) throw;
    throw Error(ErrorCode::kPipelineFailure, e.what());
  }
  persist(s);
  return sessions_[image_id] = std::move(s);
}

AnnotationSession& Workspace::mutable_session(const std::string& session_id) {
  if (auto it = sessions_.find(session_id); it != sessions_.end()) return it->second;
  const fs::path path = session_path(session_id);
  if (session_id.find_first_of("/\\") != std::string::npos || !fs::exists(path)) {
    throw Error(ErrorCode::kUnknownSession, "no session '" + session_id + "'");
  }
  return sessions_[session_id] =
             AnnotationSession::from_json(read_json_file(path, ErrorCode::kMalformedFile));
}

const AnnotationSession& Workspace::session(const std::string& session_id) {
  return mutable_session(session_id);
}

namespace {

void check_revision(const AnnotationSession& s, std::optional<long long> revision) {
  if (revision && *revision != s.revision()) {
    throw Error(ErrorCode::kStaleRevision, "revision " + std::to_string(*revision) +
                                               " is stale, current is " +
                                               std::to_string(s.revision()));
  }
}

}  // namespace

ClickDelta Workspace::click(const std::string& session_id, ClickEvent event,
                            std::optional<long long> revision) {
  auto& s = mutable_session(session_id);
  if (s.sealed()) throw Error(ErrorCode::kAlreadySealed, "session is sealed");
  check_revision(s, revision);
  auto delta = s.apply_click(event);
  s.bump_revision();
  persist(s);
  return delta;
}

Workspace::CommitResult Workspace::commit(const std::string& session_id,
                                          std::optional<long long> revision) {
  auto& s = mutable_session(session_id);
  if (s.sealed()) throw Error(ErrorCode::kAlreadySealed, "session is sealed");
  check_revision(s, revision);
  const auto& entry = image(s.image_id());
  auto& art = artifacts(entry.set_id);
  CommitResult result;
  result.flips = record_flips(s, prepare(entry.id).image, art.flips, config_.scales, art.pca);
  if (result.flips.false_positives + result.flips.false_negatives > 0) save_flips(entry.set_id);
  result.mask_path = root_ / "masks" / (s.image_id() + ".png");
  save_mask_png(result.mask_path, export_mask(s));
  std::string log;
  for (const auto& c : s.click_log()) log += to_json(c).dump() + "\n";
  write_text_file(root_ / "clicks" / (s.image_id() + ".jsonl"), log);
  s.seal();
  s.bump_revision();
  persist(s);
  result.revision = s.revision();
  return result;
}

}  // namespace maskforge
