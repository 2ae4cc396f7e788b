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

#include "features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "error.hpp"
#include "image_io.hpp"

namespace maskforge {

double FeatureVector::dot(const FeatureVector& other) const {
  if (other.dims() != dims()) {
    throw Error(ErrorCode::kDimensionMismatch, "dot of unequal dims");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * other.values[i];
  return s;
}

double FeatureVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

FeatureVector normalized(std::vector<double> values) {
  FeatureVector out{std::move(values), false};
  const double n = out.norm();
  if (n < 1e-12) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    out.degenerate = true;
    return out;
  }
  for (double& v : out.values) v /= n;
  return out;
}

FeatureVector describe_region(const RasterImage& img, const BitMask& mask) {
  if (mask.width() != img.width() || mask.height() != img.height()) {
    throw Error(ErrorCode::kDimensionMismatch, "mask and image differ in size");
  }
  const int w = img.width();
  const int h = img.height();
  std::vector<double> out(kDescriptorDims, 0.0);

  std::vector<double> gray(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Rgb c = img.at(x, y);
      gray[static_cast<std::size_t>(y) * w + x] =
          0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
    }
  auto g = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return gray[static_cast<std::size_t>(y) * w + x];
  };

  long long count = 0;
  double grad_total = 0.0;
  PixelRect box;
  double sx = 0.0, sy = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.get(x, y)) continue;
      ++count;
      box.include(x, y);
      sx += x;
      sy += y;
      const Rgb c = img.at(x, y);
      out[(c.r >> 6) * 16 + (c.g >> 6) * 4 + (c.b >> 6)] += 1.0;

      const double gx = (g(x + 1, y - 1) + 2 * g(x + 1, y) + g(x + 1, y + 1)) -
                        (g(x - 1, y - 1) + 2 * g(x - 1, y) + g(x - 1, y + 1));
      const double gy = (g(x - 1, y + 1) + 2 * g(x, y + 1) + g(x + 1, y + 1)) -
                        (g(x - 1, y - 1) + 2 * g(x, y - 1) + g(x + 1, y - 1));
      const double mag = std::hypot(gx, gy);
      if (mag > 0.0) {
        double theta = std::atan2(gy, gx);
        if (theta < 0) theta += 2 * std::numbers::pi;
        int bin = static_cast<int>(theta / (2 * std::numbers::pi) * kOrientationBins);
        bin = std::clamp(bin, 0, kOrientationBins - 1);
        out[kColorBins + bin] += mag;
        grad_total += mag;
      }
    }
  }
  if (count == 0) throw Error(ErrorCode::kEmptyMask, "region mask is empty");

  for (int i = 0; i < kColorBins; ++i) out[i] /= static_cast<double>(count);
  for (int i = 0; i < kOrientationBins; ++i) {
    double& v = out[kColorBins + i];
    v = grad_total > 0.0 ? v / grad_total : 1.0 / kOrientationBins;
  }
  const int geo = kColorBins + kOrientationBins;
  out[geo + 0] = static_cast<double>(count) / (static_cast<double>(w) * h);
  out[geo + 1] = static_cast<double>(box.width()) / (box.width() + box.height());
  out[geo + 2] = (sx / count + 0.5) / w;
  out[geo + 3] = (sy / count + 0.5) / h;
  return normalized(std::move(out));
}

FeatureVector describe_image(const RasterImage& img) {
  return describe_region(img, BitMask(img.width(), img.height(), true));
}

// ---------------------------------------------------------------------------
// PCA

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best]) + 1e-12) best = i;
  if (v[best] < 0) v = -v;
}

}  // namespace

PcaModel fit_pca(std::span<const FeatureVector> samples, int out_dims) {
  if (out_dims < 1 || samples.size() < static_cast<std::size_t>(out_dims)) {
    throw Error(ErrorCode::kTooFewSamples,
                "need at least outDims >= 1 samples, got " +
                    std::to_string(samples.size()));
  }
  const int dims = samples.front().dims();
  if (dims < out_dims) {
    throw Error(ErrorCode::kDimensionMismatch, "outDims exceeds input dims");
  }
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd x(n, dims);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (samples[i].dims() != dims) {
      throw Error(ErrorCode::kDimensionMismatch, "samples differ in dims");
    }
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(samples[i].values.data(), dims);
  }
  PcaModel m;
  m.input_dims = dims;
  m.output_dims = out_dims;
  m.mean = x.colwise().mean().transpose();
  x.rowwise() -= m.mean.transpose();
  const double denom = static_cast<double>(std::max<Eigen::Index>(n - 1, 1));

  m.basis.resize(out_dims, dims);
  m.explained_variance.resize(out_dims);
  int filled = 0;
  if (dims <= n) {
    const Eigen::MatrixXd cov = (x.transpose() * x) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    // Eigen returns ascending eigenvalues.
    for (int k = 0; k < out_dims; ++k) {
      const Eigen::Index col = dims - 1 - k;
      Eigen::VectorXd v = es.eigenvectors().col(col);
      fix_sign(v);
      m.basis.row(k) = v.transpose();
      m.explained_variance[k] = std::max(0.0, es.eigenvalues()[col]);
    }
    filled = out_dims;
  } else {
    // Fewer samples than dims: work on the n x n Gram matrix.
    const Eigen::MatrixXd gram = (x * x.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (int k = 0; k < out_dims; ++k) {
      const Eigen::Index col = n - 1 - k;
      const double lambda = es.eigenvalues()[col];
      if (lambda <= 1e-10 * scale) break;
      Eigen::VectorXd v = x.transpose() * es.eigenvectors().col(col);
      v.normalize();
      fix_sign(v);
      m.basis.row(k) = v.transpose();
      m.explained_variance[k] = lambda;
      ++filled;
    }
  }
  // Zero-variance directions: complete the basis with canonical vectors.
  for (int j = 0; filled < out_dims && j < dims; ++j) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(dims, j);
    for (int k = 0; k < filled; ++k) v -= m.basis.row(k).dot(v) * m.basis.row(k).transpose();
    if (v.norm() < 1e-6) continue;
    v.normalize();
    fix_sign(v);
    m.basis.row(filled) = v.transpose();
    m.explained_variance[filled] = 0.0;
    ++filled;
  }
  return m;
}

Eigen::VectorXd project_raw(const PcaModel& model, const FeatureVector& x) {
  if (x.dims() != model.input_dims) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector has " + std::to_string(x.dims()) + " dims, model expects " +
                    std::to_string(model.input_dims));
  }
  const Eigen::Map<const Eigen::VectorXd> v(x.values.data(), x.dims());
  return model.basis * (v - model.mean);
}

Eigen::VectorXd reconstruct(const PcaModel& model, const Eigen::VectorXd& code) {
  return model.basis.transpose() * code + model.mean;
}

FeatureVector project(const PcaModel& model, const FeatureVector& x) {
  const Eigen::VectorXd p = project_raw(model, x);
  return normalized(std::vector<double>(p.data(), p.data() + p.size()));
}

// ---------------------------------------------------------------------------
// Embeddings

std::string fold_tag(std::string_view tag) {
  std::size_t b = 0, e = tag.size();
  while (b < e && std::isspace(static_cast<unsigned char>(tag[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(tag[e - 1]))) --e;
  std::string out(tag.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  const auto it = entries_.find(fold_tag(token));
  return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingTable::insert(std::string_view token, std::vector<double> values) {
  if (dims_ == 0) dims_ = static_cast<int>(values.size());
  if (static_cast<int>(values.size()) != dims_) {
    throw Error(ErrorCode::kInconsistentDims, std::string(token));
  }
  FeatureVector unit = normalized(std::move(values));
  if (unit.degenerate) {
    throw Error(ErrorCode::kMalformedLine, "zero vector for " + std::string(token));
  }
  const std::string key = fold_tag(token);
  if (entries_.count(key)) warn("duplicate embedding token '" + key + "', last wins");
  entries_[key] = std::move(unit.values);
}

EmbeddingTable parse_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    std::string field;
    while (ss >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw Error(ErrorCode::kMalformedLine,
                    "line " + std::to_string(lineno) + ": bad number '" + field + "'");
      }
      values.push_back(v);
    }
    if (values.empty()) {
      throw Error(ErrorCode::kMalformedLine,
                  "line " + std::to_string(lineno) + ": no vector values");
    }
    if (table.size() > 0 && static_cast<int>(values.size()) != table.dims()) {
      throw Error(ErrorCode::kInconsistentDims,
                  "line " + std::to_string(lineno) + ": expected " +
                      std::to_string(table.dims()) + " values, got " +
                      std::to_string(values.size()));
    }
    table.insert(token, std::move(values));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUnreadableFile, "cannot open " + path.string());
  return parse_embeddings(in);
}

TagVector tag_vector(const EmbeddingTable& table, std::string_view tag) {
  const std::string key = fold_tag(tag);
  if (const auto* v = table.find(key)) return {*v, {}};
  return {{}, key.empty() ? std::string("\x01") : key};
}

double cosine(const TagVector& a, const TagVector& b) {
  if (a.out_of_vocabulary() || b.out_of_vocabulary()) {
    return a.oov_token == b.oov_token ? 1.0 : 0.0;
  }
  if (a.dense.size() != b.dense.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "tag vectors differ in dims");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.dense.size(); ++i) s += a.dense[i] * b.dense[i];
  return std::clamp(s, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// MFV1

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t& pos) {
  if (b.size() - pos < 4) throw Error(ErrorCode::kTruncatedFile, "unexpected end of file");
  const std::uint32_t v = static_cast<std::uint32_t>(b[pos]) |
                          (static_cast<std::uint32_t>(b[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(b[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(b[pos + 3]) << 24);
  pos += 4;
  return v;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

std::vector<FeatureRecord> parse_feature_file(std::span<const std::uint8_t> bytes,
                                              int expected_dims) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "MFV1", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "missing MFV1 magic");
  }
  std::size_t pos = 4;
  const std::uint32_t count = read_u32(bytes, pos);
  const std::uint32_t dims = read_u32(bytes, pos);
  if (count == 0 && dims == 0) return {};
  if (dims == 0 || (expected_dims >= 0 && dims != static_cast<std::uint32_t>(expected_dims))) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature file has " + std::to_string(dims) + " dims");
  }
  std::vector<FeatureRecord> out;
  out.reserve(std::min<std::uint32_t>(count, 1u << 16));
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::uint32_t id_len = read_u32(bytes, pos);
    if (bytes.size() - pos < id_len) {
      throw Error(ErrorCode::kTruncatedFile, "record " + std::to_string(r) + " id cut short");
    }
    std::string id(reinterpret_cast<const char*>(bytes.data() + pos), id_len);
    pos += id_len;
    if ((bytes.size() - pos) / 4 < dims) {
      throw Error(ErrorCode::kTruncatedFile,
                  "record " + std::to_string(r) + " of " + std::to_string(count) +
                      " is truncated");
    }
    std::vector<double> values(dims);
    for (std::uint32_t d = 0; d < dims; ++d) {
      const std::uint32_t raw = read_u32(bytes, pos);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      values[d] = f;
    }
    out.push_back({std::move(id), normalized(std::move(values))});
  }
  return out;
}

std::vector<FeatureRecord> read_feature_file(const std::filesystem::path& path,
                                             int expected_dims) {
  const auto bytes = read_file_bytes(path);
  return parse_feature_file(bytes, expected_dims);
}

std::vector<std::uint8_t> serialize_feature_file(std::span<const FeatureRecord> records) {
  const std::uint32_t dims =
      records.empty() ? 0u : static_cast<std::uint32_t>(records.front().vector.dims());
  std::vector<std::uint8_t> out{'M', 'F', 'V', '1'};
  put_u32(out, static_cast<std::uint32_t>(records.size()));
  put_u32(out, dims);
  for (const auto& rec : records) {
    if (static_cast<std::uint32_t>(rec.vector.dims()) != dims) {
      throw Error(ErrorCode::kDimensionMismatch, "records differ in dims");
    }
    put_u32(out, static_cast<std::uint32_t>(rec.id.size()));
    out.insert(out.end(), rec.id.begin(), rec.id.end());
    for (double v : rec.vector.values) {
      const float f = static_cast<float>(v);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      put_u32(out, raw);
    }
  }
  return out;
}

void write_feature_file(const std::filesystem::path& path,
                        std::span<const FeatureRecord> records) {
  write_file_bytes(path, serialize_feature_file(records));
}

}  // namespace maskforge
