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

// Toy learning problems for the privacy games: isotropic Gaussian instances,
// halfspace concepts through the origin, 1-local encoders and an averaged
// perceptron that learns over encodings.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ihlab/core/mt19937.hpp"
#include "ihlab/core/types.hpp"

namespace ihlab::theory {

using Vec = std::vector<double>;

inline constexpr std::uint64_t kRejectionBudget = 1'000'000;

// Box-Muller on the MT stream.
inline void fill_gaussian(MtState& rng, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const double u1 = (static_cast<double>(rng.next_u32()) + 1.0) / 4294967296.0;
    const double u2 = rng.next_f64();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < out.size()) out[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// c or 1 - c.
struct Concept {
  int index = 0;
  bool negated = false;

  Concept complement() const { return {index, !negated}; }
};

class LearningProblem {
 public:
  LearningProblem(int dim, std::vector<Vec> normals)
      : dim_(dim), normals_(std::move(normals)) {
    IHLAB_REQUIRE(dim >= 1, "dimension must be positive");
    IHLAB_REQUIRE(!normals_.empty(), "need at least one concept");
    for (const auto& n : normals_) {
      IHLAB_REQUIRE(static_cast<int>(n.size()) == dim, "normal has ", n.size(),
                    " entries, dimension is ", dim);
      IHLAB_REQUIRE(std::fabs(std::sqrt(dot(n, n)) - 1.0) < 1e-9,
                    "concept normals must be unit length");
    }
  }

  // The first `num_concepts` basis vectors: orthogonal, each balanced.
  static LearningProblem orthogonal(int dim, int num_concepts) {
    IHLAB_REQUIRE(num_concepts >= 1 && num_concepts <= dim, "need 1 <= concepts (",
                  num_concepts, ") <= dim (", dim, ")");
    std::vector<Vec> normals;
    for (int i = 0; i < num_concepts; ++i) {
      Vec n(static_cast<std::size_t>(dim), 0.0);
      n[static_cast<std::size_t>(i)] = 1.0;
      normals.push_back(std::move(n));
    }
    return LearningProblem(dim, std::move(normals));
  }

  int dim() const { return dim_; }
  int num_concepts() const { return static_cast<int>(normals_.size()); }
  const Vec& normal(int i) const { return normals_.at(static_cast<std::size_t>(i)); }

  bool is_orthogonal() const {
    for (std::size_t i = 0; i < normals_.size(); ++i) {
      for (std::size_t j = i + 1; j < normals_.size(); ++j) {
        if (std::fabs(dot(normals_[i], normals_[j])) >= 1e-9) return false;
      }
    }
    return true;
  }

  Vec sample(MtState& rng) const {
    Vec x(static_cast<std::size_t>(dim_));
    fill_gaussian(rng, x);
    return x;
  }

  // 1 iff <normal, x> >= 0, flipped for a negated concept.
  int label(Concept c, const Vec& x) const {
    IHLAB_REQUIRE(c.index >= 0 && c.index < num_concepts(), "concept ", c.index,
                  " out of range");
    const int y = dot(normals_[static_cast<std::size_t>(c.index)], x) >= 0.0 ? 1 : 0;
    return c.negated ? 1 - y : y;
  }

  template <typename Pred>
  Vec sample_where(MtState& rng, Pred&& accept,
                   std::uint64_t budget = kRejectionBudget) const {
    for (std::uint64_t t = 0; t < budget; ++t) {
      Vec x = sample(rng);
      if (accept(x)) return x;
    }
    throw Error(detail::concat("rejection sampling exhausted its budget of ", budget,
                               " draws"));
  }

 private:
  int dim_;
  std::vector<Vec> normals_;
};

enum class EncoderKind { kIdentity, kAdditiveNoise, kLabelRevealing, kNull };

// A 1-local, decomposable encoder: instances are mapped one at a time and
// labels pass through untouched.
struct LocalEncoder {
  EncoderKind kind = EncoderKind::kIdentity;
  double scale = 0.0;
  Vec normal;  // label-revealing only
  bool negated = false;

  static LocalEncoder identity() { return {}; }
  static LocalEncoder additive_noise(double scale) {
    IHLAB_REQUIRE(scale >= 0.0, "noise scale must be nonnegative");
    LocalEncoder e;
    e.kind = EncoderKind::kAdditiveNoise;
    e.scale = scale;
    return e;
  }
  static LocalEncoder label_revealing(const LearningProblem& p, Concept c) {
    LocalEncoder e;
    e.kind = EncoderKind::kLabelRevealing;
    e.normal = p.normal(c.index);
    e.negated = c.negated;
    return e;
  }
  static LocalEncoder null_encoder() {
    LocalEncoder e;
    e.kind = EncoderKind::kNull;
    return e;
  }

  int locality() const { return 1; }

  std::string name() const {
    switch (kind) {
      case EncoderKind::kIdentity: return "identity";
      case EncoderKind::kAdditiveNoise: return "additive-noise(" + std::to_string(scale) + ")";
      case EncoderKind::kLabelRevealing: return "label-revealing";
      case EncoderKind::kNull: return "null";
    }
    return "?";
  }

  // The encoding with any randomness removed.
  Vec clean(const Vec& x) const {
    switch (kind) {
      case EncoderKind::kIdentity:
      case EncoderKind::kAdditiveNoise:
        return x;
      case EncoderKind::kLabelRevealing: {
        int y = dot(normal, x) >= 0.0 ? 1 : 0;
        if (negated) y = 1 - y;
        return {y == 1 ? 1.0 : -1.0};
      }
      case EncoderKind::kNull:
        return {0.0};
    }
    return {};
  }

  Vec encode(const Vec& x, MtState& rng) const {
    Vec out = clean(x);
    if (kind == EncoderKind::kAdditiveNoise && scale > 0.0) {
      Vec noise(out.size());
      fill_gaussian(rng, noise);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * noise[i];
    }
    return out;
  }
};

struct LabeledSample {
  Vec x;
  int y = 0;
};

// Draws one labeled instance.
using LabeledSource = std::function<LabeledSample(MtState&)>;

inline LabeledSource concept_source(const LearningProblem& p, Concept c) {
  return [&p, c](MtState& rng) {
    Vec x = p.sample(rng);
    const int y = p.label(c, x);
    return LabeledSample{std::move(x), y};
  };
}

struct LearnerConfig {
  int epochs = 10;
  double learning_rate = 1.0;
};

struct Hypothesis {
  Vec w;
  double b = 0.0;

  double score(const Vec& f) const { return dot(w, f) + b; }
  int predict(const Vec& f) const { return score(f) > 0.0 ? 1 : 0; }
};

// Averaged perceptron with bias. The visiting order is reshuffled each epoch
// from `seed`, so training is deterministic in (data, seed).
inline Hypothesis train_perceptron(const std::vector<Vec>& features,
                                   const std::vector<int>& labels,
                                   const LearnerConfig& cfg, std::uint32_t seed) {
  IHLAB_REQUIRE(!features.empty(), "empty training set");
  IHLAB_REQUIRE(features.size() == labels.size(), "features/labels size mismatch");
  IHLAB_REQUIRE(cfg.epochs >= 1 && cfg.learning_rate > 0.0, "bad learner config");
  const std::size_t d = features[0].size();
  Vec w(d, 0.0), ws(d, 0.0);
  double b = 0.0, bs = 0.0;
  std::uint64_t steps = 0;
  MtState rng(seed);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = rng.shuffle(static_cast<int>(features.size()));
    for (int i : order) {
      const auto& f = features[static_cast<std::size_t>(i)];
      IHLAB_REQUIRE(f.size() == d, "ragged features");
      const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      if (y * (dot(w, f) + b) <= 0.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += cfg.learning_rate * y * f[j];
        b += cfg.learning_rate * y;
      }
      for (std::size_t j = 0; j < d; ++j) ws[j] += w[j];
      bs += b;
      ++steps;
    }
  }
  Hypothesis h;
  h.w.resize(d);
  for (std::size_t j = 0; j < d; ++j) h.w[j] = ws[j] / static_cast<double>(steps);
  h.b = bs / static_cast<double>(steps);
  return h;
}

// Draws n labeled samples from `source`, encodes the instances and trains.
inline Hypothesis train_on_encodings(const LabeledSource& source,
                                     const LocalEncoder& enc, int n,
                                     const LearnerConfig& cfg, MtState& rng) {
  IHLAB_REQUIRE(n >= 1, "n must be positive");
  std::vector<Vec> features;
  std::vector<int> labels;
  features.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto s = source(rng);
    features.push_back(enc.encode(s.x, rng));
    labels.push_back(s.y);
  }
  return train_perceptron(features, labels, cfg, rng.next_u32());
}

}  // namespace ihlab::theory
