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

#include "proposals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <string>

#include "error.hpp"
#include "retrieval.hpp"
#include "rle.hpp"

namespace maskforge {

namespace {

constexpr int kBinsPerChannel = 25;
constexpr int kHistBins = 3 * kBinsPerChannel;

struct Edge {
  long long pairs = 0;
  double contrast = 0.0;
};

struct Node {
  std::array<double, kHistBins> hist{};
  long long size = 0;
  PixelRect bbox;
  long long frame = 0;  // pixel sides lying on the image border
  std::map<int, Edge> edges;
  int left = -1;
  int right = -1;
  bool alive = true;
  double objectness = 0.0;
};

struct Candidate {
  double similarity;
  int a;
  int b;
};

struct CandidateOrder {
  bool operator()(const Candidate& x, const Candidate& y) const {
    if (x.similarity != y.similarity) return x.similarity < y.similarity;
    if (x.a != y.a) return x.a > y.a;
    return x.b > y.b;
  }
};

double raw_objectness(const Node& n, double image_pixels) {
  long long pairs = 0;
  double contrast = 0.0;
  for (const auto& [_, e] : n.edges) {
    pairs += e.pairs;
    contrast += e.contrast;
  }
  const double boundary = static_cast<double>(pairs + n.frame);
  if (boundary <= 0.0 || pairs == 0) return 0.0;
  const double mean_contrast = contrast / boundary;
  const double interior = static_cast<double>(pairs) / boundary;
  return (static_cast<double>(n.size) / image_pixels) * mean_contrast * interior;
}

}  // namespace

std::vector<ObjectProposal> generate_proposals(const RasterImage& img,
                                               const SuperpixelPartition& fine,
                                               const ProposalParams& params) {
  if (params.max_count < 1) {
    throw Error(ErrorCode::kInvalidParameter, "maxCount must be >= 1");
  }
  if (img.width() != fine.width() || img.height() != fine.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "partition and image differ in size");
  }
  const int w = img.width();
  const int h = img.height();
  const double npix = static_cast<double>(w) * h;
  const int leaves = fine.region_count();
  const auto labels = fine.labels();

  std::vector<std::array<double, 3>> lab(labels.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) lab[static_cast<std::size_t>(y) * w + x] = rgb_to_lab(img.at(x, y));
  auto contrast = [&](std::size_t i, std::size_t j) {
    const double dl = lab[i][0] - lab[j][0];
    const double da = lab[i][1] - lab[j][1];
    const double db = lab[i][2] - lab[j][2];
    return std::sqrt(dl * dl + da * da + db * db) / 100.0;
  };

  std::vector<Node> nodes(leaves);
  nodes.reserve(2 * static_cast<std::size_t>(leaves));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      Node& n = nodes[labels[i]];
      const Rgb c = img.at(x, y);
      n.hist[c.r * kBinsPerChannel / 256] += 1.0;
      n.hist[kBinsPerChannel + c.g * kBinsPerChannel / 256] += 1.0;
      n.hist[2 * kBinsPerChannel + c.b * kBinsPerChannel / 256] += 1.0;
      ++n.size;
      n.bbox.include(x, y);
      n.frame += (x == 0) + (y == 0) + (x == w - 1) + (y == h - 1);
      if (x + 1 < w && labels[i + 1] != labels[i]) {
        const double d = contrast(i, i + 1);
        for (auto [p, q] : {std::pair{labels[i], labels[i + 1]}, std::pair{labels[i + 1], labels[i]}}) {
          Edge& e = nodes[p].edges[q];
          ++e.pairs;
          e.contrast += d;
        }
      }
      if (y + 1 < h && labels[i + w] != labels[i]) {
        const double d = contrast(i, i + w);
        for (auto [p, q] : {std::pair{labels[i], labels[i + w]}, std::pair{labels[i + w], labels[i]}}) {
          Edge& e = nodes[p].edges[q];
          ++e.pairs;
          e.contrast += d;
        }
      }
    }
  }
  for (auto& n : nodes) {
    const double total = 3.0 * static_cast<double>(n.size);
    for (double& v : n.hist) v /= total;
  }

  auto similarity = [&](const Node& a, const Node& b) {
    double inter = 0.0;
    for (int k = 0; k < kHistBins; ++k) inter += std::min(a.hist[k], b.hist[k]);
    const double size_term = 1.0 - static_cast<double>(a.size + b.size) / npix;
    PixelRect box = a.bbox;
    box.include(b.bbox);
    const double fill = 1.0 - static_cast<double>(box.area() - a.size - b.size) / npix;
    return params.color_weight * inter + params.size_weight * size_term +
           params.fill_weight * fill;
  };

  std::priority_queue<Candidate, std::vector<Candidate>, CandidateOrder> queue;
  for (int a = 0; a < leaves; ++a)
    for (const auto& [b, _] : nodes[a].edges)
      if (a < b) queue.push({similarity(nodes[a], nodes[b]), a, b});

  while (!queue.empty()) {
    const Candidate top = queue.top();
    queue.pop();
    if (!nodes[top.a].alive || !nodes[top.b].alive) continue;
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    Node& c = nodes.back();
    Node& a = nodes[top.a];
    Node& b = nodes[top.b];
    c.size = a.size + b.size;
    for (int k = 0; k < kHistBins; ++k) {
      c.hist[k] = (a.hist[k] * static_cast<double>(a.size) + b.hist[k] * static_cast<double>(b.size)) /
                  static_cast<double>(c.size);
    }
    c.bbox = a.bbox;
    c.bbox.include(b.bbox);
    c.frame = a.frame + b.frame;
    c.left = top.a;
    c.right = top.b;
    for (const Node* src : {&a, &b}) {
      for (const auto& [nb, e] : src->edges) {
        if (nb == top.a || nb == top.b) continue;
        Edge& dst = c.edges[nb];
        dst.pairs += e.pairs;
        dst.contrast += e.contrast;
      }
    }
    a.alive = false;
    b.alive = false;
    for (const auto& [nb, e] : c.edges) {
      Node& n = nodes[nb];
      n.edges.erase(top.a);
      n.edges.erase(top.b);
      n.edges[id] = e;
      queue.push({similarity(c, n), std::min(nb, id), std::max(nb, id)});
    }
  }

  // Merged-away nodes keep the edge map they had when they died; its totals
  // still describe their own boundary.
  double best = 0.0;
  for (auto& n : nodes) {
    n.objectness = raw_objectness(n, npix);
    best = std::max(best, n.objectness);
  }
  std::vector<int> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (nodes[x].objectness != nodes[y].objectness) return nodes[x].objectness > nodes[y].objectness;
    if (nodes[x].size != nodes[y].size) return nodes[x].size < nodes[y].size;
    return x < y;
  });

  std::vector<ObjectProposal> out;
  std::set<std::vector<int>> seen;
  for (int id : order) {
    if (static_cast<int>(out.size()) >= params.max_count) break;
    std::vector<int> members;
    std::vector<int> stack{id};
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      if (nodes[k].left < 0) {
        members.push_back(k);
      } else {
        stack.push_back(nodes[k].left);
        stack.push_back(nodes[k].right);
      }
    }
    std::sort(members.begin(), members.end());
    if (!seen.insert(members).second) continue;
    std::vector<char> in(leaves, 0);
    for (int m : members) in[m] = 1;
    BitMask mask(w, h);
    auto bits = mask.mutable_bits();
    for (std::size_t i = 0; i < labels.size(); ++i) bits[i] = in[labels[i]];
    ObjectProposal p;
    p.mask = std::move(mask);
    p.regions = std::move(members);
    p.objectness = best > 0.0 ? nodes[id].objectness / best : 0.0;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ObjectProposal> parse_proposals(const nlohmann::json& doc, int width,
                                            int height) {
  try {
    const int fw = doc.at("width").get<int>();
    const int fh = doc.at("height").get<int>();
    if (fw != width || fh != height) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "proposal file is " + std::to_string(fw) + "x" + std::to_string(fh) +
                      ", image is " + std::to_string(width) + "x" + std::to_string(height));
    }
    std::vector<ObjectProposal> out;
    for (const auto& entry : doc.at("proposals")) {
      const auto runs = entry.at("rle").get<std::vector<std::uint32_t>>();
      ObjectProposal p;
      p.mask = decode_rle(runs, width, height);
      p.objectness = entry.value("objectness", 0.0);
      if (!std::isfinite(p.objectness)) {
        throw Error(ErrorCode::kMalformedFile, "non-finite objectness");
      }
      if (!p.mask.any()) throw Error(ErrorCode::kMalformedFile, "empty proposal mask");
      out.push_back(std::move(p));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, e.what());
  }
}

std::vector<ObjectProposal> load_proposals(const std::filesystem::path& path, int width,
                                           int height) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  return parse_proposals(doc, width, height);
}

nlohmann::json proposals_to_json(std::span<const ObjectProposal> proposals) {
  nlohmann::json doc;
  doc["width"] = proposals.empty() ? 0 : proposals.front().mask.width();
  doc["height"] = proposals.empty() ? 0 : proposals.front().mask.height();
  auto list = nlohmann::json::array();
  for (const auto& p : proposals) {
    list.push_back({{"objectness", p.objectness}, {"rle", encode_rle(p.mask)}});
  }
  doc["proposals"] = std::move(list);
  return doc;
}

int score_feature(const FeatureVector& projected, const ScoringContext& ctx) {
  std::optional<SparseCode> weak;
  std::optional<SparseCode> strong;
  if (ctx.weak && !ctx.weak->empty()) weak = omp_encode(*ctx.weak, projected, ctx.omp);
  if (ctx.strong && !ctx.strong->empty()) strong = omp_encode(*ctx.strong, projected, ctx.omp);
  return coding_length(weak ? &*weak : nullptr, strong ? &*strong : nullptr);
}

void score_proposals(std::span<ObjectProposal> proposals, const RasterImage& img,
                     const ScoringContext& ctx) {
  if (proposals.empty()) throw Error(ErrorCode::kInvalidParameter, "no proposals to score");
  if (!ctx.pca) throw Error(ErrorCode::kInvalidParameter, "scoring needs a PCA model");
  std::vector<int> lengths;
  lengths.reserve(proposals.size());
  for (auto& p : proposals) {
    p.feature = describe_masked_object(img, p.mask);
    p.coding_length = score_feature(project(*ctx.pca, p.feature), ctx);
    lengths.push_back(p.coding_length);
  }
  const auto probs = tag_probabilities(lengths, ctx.q);
  for (std::size_t i = 0; i < proposals.size(); ++i) proposals[i].tag_probability = probs[i];
}

}  // namespace maskforge
