// Copyright 2026 The ihlab Authors
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

// Similarity between encodings ("do these share a private source?") and
// between an encoding and a recovered clique.
//
// The default scorer is abs-correlation: take |e| (which removes the sign
// mask), map it to features (horizontal and vertical differences by default,
// or the pixels, optionally 2x2-blurred), center, and return the positive
// part of the Pearson correlation. Pairs whose labels share no class score 0.
// Any SimilarityModel can replace it.

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "ihlab/core/parallel.hpp"
#include "ihlab/core/types.hpp"

namespace ihlab {

// Symmetric |E| x |E| matrix with zero diagonal, entries in [0,1].
class SimilarityGraph {
 public:
  SimilarityGraph() = default;
  explicit SimilarityGraph(std::size_t n) : n_(n), w_(n * n, 0.0f) {}

  std::size_t size() const { return n_; }
  float at(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, float v) {
    w_[i * n_ + j] = v;
    w_[j * n_ + i] = v;
  }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(w_).subspan(i * n_, n_);
  }
  std::span<const float> data() const { return w_; }

 private:
  std::size_t n_ = 0;
  std::vector<float> w_;
};

// |X| x |E| set-to-encoding similarities in [0,1].
class SetSimilarityGraph {
 public:
  SetSimilarityGraph() = default;
  SetSimilarityGraph(std::size_t sets, std::size_t encodings)
      : sets_(sets), n_(encodings), w_(sets * encodings, 0.0f) {}

  std::size_t num_sets() const { return sets_; }
  std::size_t num_encodings() const { return n_; }
  float at(std::size_t s, std::size_t e) const { return w_[s * n_ + e]; }
  float& at(std::size_t s, std::size_t e) { return w_[s * n_ + e]; }

 private:
  std::size_t sets_ = 0;
  std::size_t n_ = 0;
  std::vector<float> w_;
};

enum class FeatureKind {
  kPixels,  // |e|
  kBlur,    // |e| through a 2x2 box
  kEdges,   // forward differences of |e| along x and y
};

struct SimilarityOptions {
  FeatureKind features = FeatureKind::kEdges;
  bool center = true;
  // Two encodings can only share a source if their labels share a class.
  bool label_gate = true;
  int threads = 0;
};

// Classes with nonzero mass in a mixed label.
inline std::vector<int> label_support(const LabelVector& z, double eps = 1e-9) {
  std::vector<int> out;
  for (std::size_t c = 0; c < z.probs.size(); ++c) {
    if (z.probs[c] > eps) out.push_back(static_cast<int>(c));
  }
  return out;
}

inline bool labels_overlap(const LabelVector& a, const LabelVector& b) {
  const std::size_t n = std::min(a.probs.size(), b.probs.size());
  for (std::size_t c = 0; c < n; ++c) {
    if (a.probs[c] > 1e-9 && b.probs[c] > 1e-9) return true;
  }
  return false;
}

// The class carried by the most labels among `members` (lowest on ties), or
// -1 when no member has a label.
inline int majority_class(const EncodedDataset& ds, std::span<const int> members) {
  std::vector<int> count;
  for (int m : members) {
    const auto& z = ds.encodings.at(static_cast<std::size_t>(m)).label;
    if (count.size() < z.probs.size()) count.resize(z.probs.size(), 0);
    for (int c : label_support(z)) ++count[static_cast<std::size_t>(c)];
  }
  if (count.empty()) return -1;
  const auto it = std::max_element(count.begin(), count.end());
  return *it > 0 ? static_cast<int>(it - count.begin()) : -1;
}

// Features of |img| per `kind`. Blur is valid-mode and needs a 2x2 image;
// edges need at least two pixels along some axis. Otherwise the pixels are
// used.
inline std::vector<double> abs_features(const Image& img, FeatureKind kind) {
  const Shape& s = img.shape();
  auto a = [&](int y, int x, int c) { return std::fabs(static_cast<double>(img.at(y, x, c))); };
  std::vector<double> out;
  if (kind == FeatureKind::kBlur && s.height >= 2 && s.width >= 2) {
    out.reserve(static_cast<std::size_t>((s.height - 1) * (s.width - 1) * s.channels));
    for (int y = 0; y + 1 < s.height; ++y) {
      for (int x = 0; x + 1 < s.width; ++x) {
        for (int c = 0; c < s.channels; ++c) {
          out.push_back(0.25 * (a(y, x, c) + a(y, x + 1, c) + a(y + 1, x, c) + a(y + 1, x + 1, c)));
        }
      }
    }
    return out;
  }
  if (kind == FeatureKind::kEdges && (s.height >= 2 || s.width >= 2)) {
    out.reserve(2 * img.size());
    for (int c = 0; c < s.channels; ++c) {
      for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x + 1 < s.width; ++x) out.push_back(a(y, x + 1, c) - a(y, x, c));
      }
      for (int y = 0; y + 1 < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) out.push_back(a(y + 1, x, c) - a(y, x, c));
      }
    }
    return out;
  }
  out.resize(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = std::fabs(img[i]);
  return out;
}

// Centers and scales to unit norm in place. A constant signal becomes the
// zero vector, so every correlation against it is 0.
inline void standardize(std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double norm = 0.0;
  for (double& x : v) {
    x -= mean;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  // Relative threshold: float-stored constants still leave roundoff here.
  if (norm <= 1e-12 * std::max(1.0, std::fabs(mean)) * std::sqrt(v.size())) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  for (double& x : v) x /= norm;
}

inline double clamp_unit(double r) { return std::clamp(r, 0.0, 1.0); }

inline double correlation_of_standardized(std::span<const double> a,
                                          std::span<const double> b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return clamp_unit(dot);
}

// sim(e_i, e_j): positive part of the abs-correlation.
inline double sim(const Image& a, const Image& b, FeatureKind kind = FeatureKind::kEdges) {
  IHLAB_REQUIRE(a.shape() == b.shape(), "shape mismatch");
  auto fa = abs_features(a, kind);
  auto fb = abs_features(b, kind);
  standardize(fa);
  standardize(fb);
  return correlation_of_standardized(fa, fb);
}

// Correlation of |e| against the element-wise mean of |rep| over the
// representatives.
inline double set_sim(const Image& e, std::span<const Image> reps,
                      FeatureKind kind = FeatureKind::kEdges) {
  IHLAB_REQUIRE(!reps.empty(), "need at least one representative");
  auto fe = abs_features(e, kind);
  std::vector<double> mean(fe.size(), 0.0);
  for (const auto& r : reps) {
    IHLAB_REQUIRE(r.shape() == e.shape(), "shape mismatch");
    const auto fr = abs_features(r, kind);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += fr[i];
  }
  for (double& m : mean) m /= static_cast<double>(reps.size());
  standardize(fe);
  standardize(mean);
  return correlation_of_standardized(fe, mean);
}

// Pluggable scorer. `reps[s]` lists the encoding indices representing set s.
class SimilarityModel {
 public:
  virtual ~SimilarityModel() = default;
  virtual SimilarityGraph graph(const EncodedDataset& ds, int threads) const = 0;
  virtual SetSimilarityGraph set_graph(const EncodedDataset& ds,
                                       const std::vector<std::vector<int>>& reps,
                                       int threads) const = 0;
};

class CorrelationSimilarity final : public SimilarityModel {
 public:
  // With `center`, the dataset's mean feature vector is removed from every
  // encoding before correlating. Mixtures of many images all drift toward
  // that mean, so without it unrelated encodings correlate strongly.
  explicit CorrelationSimilarity(const SimilarityOptions& opts = {})
      : features_(opts.features), center_(opts.center), gate_(opts.label_gate) {}

  SimilarityGraph graph(const EncodedDataset& ds, int threads) const override {
    const std::size_t n = ds.size();
    const auto raw = raw_features(ds, threads);
    const std::size_t dim = raw.empty() ? 0 : raw[0].size();
    const auto common = mean_feature(raw);
    // Standardized features, stored as float for the all-pairs pass.
    std::vector<float> feats(n * dim);
    parallel_for(n, threads, [&](std::size_t i) {
      auto f = centered(raw[i], common);
      std::copy(f.begin(), f.end(), feats.begin() + static_cast<std::ptrdiff_t>(i * dim));
    });
    SimilarityGraph g(n);
    // Row i owns cells (i, j > i); set() mirrors into (j, i), which no other
    // row writes.
    parallel_for(n, threads, [&](std::size_t i) {
      const float* fi = feats.data() + i * dim;
      for (std::size_t j = i + 1; j < n; ++j) {
        const float* fj = feats.data() + j * dim;
        if (gate_ && !labels_overlap(ds.encodings[i].label, ds.encodings[j].label)) {
          continue;
        }
        float dot = 0.0f;
        for (std::size_t t = 0; t < dim; ++t) dot += fi[t] * fj[t];
        g.set(i, j, static_cast<float>(clamp_unit(dot)));
      }
    }, 1);
    return g;
  }

  SetSimilarityGraph set_graph(const EncodedDataset& ds,
                               const std::vector<std::vector<int>>& reps,
                               int threads) const override {
    const std::size_t n = ds.size();
    const auto raw = raw_features(ds, threads);
    const std::size_t dim = raw.empty() ? 0 : raw[0].size();
    const auto common = mean_feature(raw);
    std::vector<std::vector<double>> std_feats(n);
    parallel_for(n, threads, [&](std::size_t i) { std_feats[i] = centered(raw[i], common); });
    SetSimilarityGraph g(reps.size(), n);
    parallel_for(reps.size(), threads, [&](std::size_t s) {
      IHLAB_REQUIRE(!reps[s].empty(), "set ", s, " has no representatives");
      std::vector<double> mean(dim, 0.0);
      for (int r : reps[s]) {
        const auto& f = raw.at(static_cast<std::size_t>(r));
        for (std::size_t t = 0; t < dim; ++t) mean[t] += f[t];
      }
      for (double& m : mean) m /= static_cast<double>(reps[s].size());
      mean = centered(mean, common);
      const int cls = gate_ ? majority_class(ds, reps[s]) : -1;
      for (std::size_t e = 0; e < n; ++e) {
        const auto& z = ds.encodings[e].label.probs;
        if (cls >= 0 && (static_cast<std::size_t>(cls) >= z.size() ||
                         z[static_cast<std::size_t>(cls)] <= 1e-9)) {
          continue;
        }
        g.at(s, e) = static_cast<float>(correlation_of_standardized(std_feats[e], mean));
      }
    });
    return g;
  }

 private:
  std::vector<std::vector<double>> raw_features(const EncodedDataset& ds,
                                                int threads) const {
    IHLAB_REQUIRE(!ds.encodings.empty(), "empty dataset");
    std::vector<std::vector<double>> raw(ds.size());
    parallel_for(ds.size(), threads, [&](std::size_t i) {
      raw[i] = abs_features(ds.encodings[i].pixels, features_);
    });
    return raw;
  }

  // Zero vector when centering is off.
  std::vector<double> mean_feature(const std::vector<std::vector<double>>& raw) const {
    std::vector<double> m(raw.empty() ? 0 : raw[0].size(), 0.0);
    if (!center_ || raw.size() < 2) return m;
    for (const auto& f : raw) {
      for (std::size_t t = 0; t < m.size(); ++t) m[t] += f[t];
    }
    for (double& v : m) v /= static_cast<double>(raw.size());
    return m;
  }

  static std::vector<double> centered(const std::vector<double>& f,
                                      const std::vector<double>& common) {
    std::vector<double> out(f.size());
    for (std::size_t t = 0; t < f.size(); ++t) out[t] = f[t] - common[t];
    standardize(out);
    return out;
  }

  FeatureKind features_;
  bool center_;
  bool gate_;
};

// Perfect scorer built from ground truth: 1 iff the private sources
// intersect. Used to test the clustering stage in isolation.
class GroundTruthSimilarity final : public SimilarityModel {
 public:
  explicit GroundTruthSimilarity(std::vector<MixRecord> truth)
      : truth_(std::move(truth)) {}

  static bool share(const MixRecord& a, const MixRecord& b) {
    const auto [a1, a2] = a.private_indices;
    const auto [b1, b2] = b.private_indices;
    return a1 == b1 || a1 == b2 || a2 == b1 || a2 == b2;
  }

  SimilarityGraph graph(const EncodedDataset& ds, int) const override {
    IHLAB_REQUIRE(ds.size() == truth_.size(), "truth/dataset size mismatch");
    SimilarityGraph g(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = i + 1; j < ds.size(); ++j) {
        g.set(i, j, share(truth_[i], truth_[j]) ? 1.0f : 0.0f);
      }
    }
    return g;
  }

  // 1 iff e contains a source common to every representative.
  SetSimilarityGraph set_graph(const EncodedDataset& ds,
                               const std::vector<std::vector<int>>& reps,
                               int) const override {
    SetSimilarityGraph g(reps.size(), ds.size());
    for (std::size_t s = 0; s < reps.size(); ++s) {
      std::vector<int> common = {truth_.at(static_cast<std::size_t>(reps[s][0])).private_indices.first,
                                 truth_.at(static_cast<std::size_t>(reps[s][0])).private_indices.second};
      for (int r : reps[s]) {
        const auto [p, q] = truth_.at(static_cast<std::size_t>(r)).private_indices;
        std::erase_if(common, [&](int c) { return c != p && c != q; });
      }
      for (std::size_t e = 0; e < ds.size(); ++e) {
        const auto [p, q] = truth_[e].private_indices;
        const bool hit = std::any_of(common.begin(), common.end(),
                                     [&](int c) { return c == p || c == q; });
        g.at(s, e) = hit ? 1.0f : 0.0f;
      }
    }
    return g;
  }

 private:
  std::vector<MixRecord> truth_;
};

inline SimilarityGraph build_similarity_graph(const EncodedDataset& ds,
                                              const SimilarityModel& model,
                                              int threads = 0) {
  return model.graph(ds, threads);
}

inline SimilarityGraph build_similarity_graph(const EncodedDataset& ds,
                                              const SimilarityOptions& opts = {}) {
  return CorrelationSimilarity(opts).graph(ds, opts.threads);
}

}  // namespace ihlab
