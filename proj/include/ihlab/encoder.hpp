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

// InstaHide encoder: epoch permutation pairing, XMix with a sign mask, YMix.
//
// Every random choice comes from one MtState, consumed in this order (the
// seed-recovery attack relies on it bit for bit):
//
//   for each epoch:
//     p1 = shuffle(|X|)
//     p2 = shuffle(|X|), redrawn wholesale while any p1[i] == p2[i]
//     for each position i in [0, |X|):
//       k-1 real draws     -> sorted spacings give lambda (redrawn as a block
//                             in the measure-zero case of a zero spacing)
//       k-2 bounded draws  -> public indices without replacement; the t-th
//                             draw is bounded(pool - t) over unchosen slots
//       d u32 draws        -> sigma_j = +1 iff draw < 2^31 (draws are
//                             consumed even when sign flipping is off)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ihlab/core/mt19937.hpp"
#include "ihlab/core/types.hpp"

namespace ihlab {

struct EncoderConfig {
  int k = 4;
  int epochs = 1;
  bool sign_flip = true;
  int public_pool_size = 0;
  std::uint32_t seed = 0;

  void validate() const {
    IHLAB_REQUIRE(k >= 2, "k must be >= 2, got ", k);
    IHLAB_REQUIRE(epochs >= 1, "epochs must be >= 1, got ", epochs);
    IHLAB_REQUIRE(public_pool_size >= 0, "negative public pool size");
    IHLAB_REQUIRE(k == 2 || public_pool_size >= k - 2, "k=", k,
                  " needs a public pool of at least ", k - 2, ", got ",
                  public_pool_size);
  }
};

struct PrivateDataset {
  std::vector<Image> images;
  std::vector<LabelVector> labels;

  std::size_t size() const { return images.size(); }
};

struct PublicPool {
  std::vector<Image> images;

  std::size_t size() const { return images.size(); }
};

// Draws lambda uniformly on the simplex from k-1 sorted uniforms.
inline std::vector<double> draw_lambdas(MtState& rng, int k) {
  std::vector<double> cuts(static_cast<std::size_t>(k - 1));
  std::vector<double> lambdas(static_cast<std::size_t>(k));
  for (;;) {
    for (auto& c : cuts) c = rng.next_f64();
    std::sort(cuts.begin(), cuts.end());
    double prev = 0.0;
    bool positive = true;
    for (int i = 0; i < k; ++i) {
      const double cut = i < k - 1 ? cuts[static_cast<std::size_t>(i)] : 1.0;
      lambdas[static_cast<std::size_t>(i)] = cut - prev;
      positive = positive && cut > prev;
      prev = cut;
    }
    if (positive) return lambdas;
  }
}

// k-2 distinct indices into a pool, exactly one bounded draw each.
inline std::vector<int> draw_public_indices(MtState& rng, int count, int pool) {
  std::vector<int> chosen;
  std::vector<int> sorted;
  chosen.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    int idx = static_cast<int>(rng.bounded(static_cast<std::uint32_t>(pool - t)));
    for (int c : sorted) {
      if (c <= idx) ++idx;
    }
    chosen.push_back(idx);
    sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), idx), idx);
  }
  return chosen;
}

inline std::vector<std::int8_t> draw_sigma(MtState& rng, std::size_t d,
                                           bool sign_flip) {
  std::vector<std::int8_t> sigma(d);
  for (auto& s : sigma) {
    const bool plus = rng.next_u32() < 0x80000000u;
    s = (!sign_flip || plus) ? std::int8_t{1} : std::int8_t{-1};
  }
  return sigma;
}

// Two permutations of [0, n) with no shared fixed position.
inline std::pair<std::vector<int>, std::vector<int>> draw_epoch_pairing(
    MtState& rng, int n) {
  auto p1 = rng.shuffle(n);
  for (;;) {
    auto p2 = rng.shuffle(n);
    bool clash = false;
    for (int i = 0; i < n && !clash; ++i) {
      clash = p1[static_cast<std::size_t>(i)] == p2[static_cast<std::size_t>(i)];
    }
    if (!clash) return {std::move(p1), std::move(p2)};
  }
}

// Regenerates every MixRecord from the seed alone; pixel data is never
// consulted. This is the whole secret state of an encoding run.
inline std::vector<MixRecord> plan_mix_records(const EncoderConfig& cfg,
                                               int num_private, std::size_t d) {
  cfg.validate();
  IHLAB_REQUIRE(num_private >= 2, "need at least 2 private images, got ",
                num_private);
  MtState rng(cfg.seed);
  std::vector<MixRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.epochs) *
                  static_cast<std::size_t>(num_private));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto [p1, p2] = draw_epoch_pairing(rng, num_private);
    for (int i = 0; i < num_private; ++i) {
      MixRecord rec;
      rec.epoch = epoch;
      rec.private_indices = {p1[static_cast<std::size_t>(i)],
                             p2[static_cast<std::size_t>(i)]};
      rec.lambdas = draw_lambdas(rng, cfg.k);
      rec.public_indices =
          draw_public_indices(rng, cfg.k - 2, cfg.public_pool_size);
      rec.sigma = draw_sigma(rng, d, cfg.sign_flip);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

// sigma o (l1 x1 + l2 x2 + sum l_{i+2} p_i)
inline Image xmix(std::span<const Image> privates, std::span<const Image> publics,
                  std::span<const double> lambdas,
                  std::span<const std::int8_t> sigma) {
  IHLAB_REQUIRE(privates.size() == 2, "need exactly 2 private images, got ",
                privates.size());
  IHLAB_REQUIRE(lambdas.size() == 2 + publics.size(), "got ", lambdas.size(),
                " weights for ", 2 + publics.size(), " images");
  const Shape shape = privates[0].shape();
  double total = 0.0;
  for (double l : lambdas) {
    IHLAB_REQUIRE(l >= 0.0 && std::isfinite(l), "weight ", l, " is not >= 0");
    total += l;
  }
  IHLAB_REQUIRE(std::fabs(total - 1.0) <= 1e-9, "weights sum to ", total,
                ", not 1");
  IHLAB_REQUIRE(sigma.size() == shape.size(), "sigma has length ", sigma.size(),
                ", image has ", shape.size(), " pixels");
  IHLAB_REQUIRE(is_sign_vector(sigma), "sigma entries must be +-1");
  std::vector<const Image*> parts = {&privates[0], &privates[1]};
  for (const auto& p : publics) parts.push_back(&p);
  for (const Image* p : parts) {
    IHLAB_REQUIRE(p->shape() == shape, "shape mismatch: ", to_string(p->shape()),
                  " vs ", to_string(shape));
  }
  Image out(shape);
  for (std::size_t j = 0; j < shape.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      acc += lambdas[i] * static_cast<double>((*parts[i])[j]);
    }
    out[j] = static_cast<float>(sigma[j] * acc);
  }
  return out;
}

inline LabelVector ymix(const LabelVector& yi, const LabelVector& yj,
                        double lambda1, double lambda2) {
  IHLAB_REQUIRE(yi.one_hot_class().has_value() && yj.one_hot_class().has_value(),
                "labels must be one-hot");
  IHLAB_REQUIRE(yi.num_classes() == yj.num_classes(), "class count mismatch");
  IHLAB_REQUIRE(lambda1 > 0.0 && lambda2 > 0.0, "weights must be positive");
  LabelVector out;
  out.probs.resize(yi.probs.size());
  for (std::size_t c = 0; c < out.probs.size(); ++c) {
    out.probs[c] = lambda1 * yi.probs[c] + lambda2 * yj.probs[c];
  }
  return out;
}

// Materializes one encoding from its record.
inline EncodedImage encode_one(const MixRecord& rec, const PrivateDataset& priv,
                               const PublicPool& pub) {
  const Image privates[2] = {
      priv.images.at(static_cast<std::size_t>(rec.private_indices.first)),
      priv.images.at(static_cast<std::size_t>(rec.private_indices.second))};
  std::vector<Image> publics;
  publics.reserve(rec.public_indices.size());
  for (int p : rec.public_indices) {
    publics.push_back(pub.images.at(static_cast<std::size_t>(p)));
  }
  EncodedImage e;
  e.pixels = xmix(privates, publics, rec.lambdas, rec.sigma);
  e.label = ymix(priv.labels.at(static_cast<std::size_t>(rec.private_indices.first)),
                 priv.labels.at(static_cast<std::size_t>(rec.private_indices.second)),
                 rec.lambdas[0], rec.lambdas[1]);
  return e;
}

inline EncodedDataset encode_dataset(const PrivateDataset& priv,
                                     const PublicPool& pub,
                                     const EncoderConfig& cfg) {
  cfg.validate();
  IHLAB_REQUIRE(priv.images.size() == priv.labels.size(),
                "image/label count mismatch");
  IHLAB_REQUIRE(priv.size() >= 2, "need at least 2 private images");
  IHLAB_REQUIRE(static_cast<int>(pub.size()) >= cfg.public_pool_size,
                "config declares a pool of ", cfg.public_pool_size,
                " but only ", pub.size(), " public images were given");
  const Shape shape = priv.images[0].shape();
  for (const auto& img : priv.images) {
    IHLAB_REQUIRE(img.shape() == shape, "private images differ in shape");
    IHLAB_REQUIRE(img.in_range(0.0f, 1.0f), "private pixel outside [0,1]");
  }
  for (const auto& img : pub.images) {
    IHLAB_REQUIRE(img.shape() == shape, "public image shape mismatch");
  }

  EncodedDataset ds;
  ds.params.k = cfg.k;
  ds.params.epochs = cfg.epochs;
  ds.params.num_private = static_cast<int>(priv.size());
  ds.params.num_classes = priv.labels[0].num_classes();
  ds.params.public_pool_size = cfg.public_pool_size;
  ds.params.sign_flip = cfg.sign_flip;
  ds.params.shape = shape;

  auto records = plan_mix_records(cfg, static_cast<int>(priv.size()), shape.size());
  ds.encodings.reserve(records.size());
  for (const auto& rec : records) ds.encodings.push_back(encode_one(rec, priv, pub));
  ds.ground_truth = std::move(records);
  return ds;
}

inline EncoderConfig config_from_params(const DatasetParams& p,
                                        std::uint32_t seed) {
  EncoderConfig cfg;
  cfg.k = p.k;
  cfg.epochs = p.epochs;
  cfg.sign_flip = p.sign_flip;
  cfg.public_pool_size = p.public_pool_size;
  cfg.seed = seed;
  return cfg;
}

}  // namespace ihlab
