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

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ihlab/encoder.hpp"
#include "ihlab/metrics.hpp"
#include "ihlab/synthetic.hpp"

namespace ihlab {
namespace {

const Shape kShape{8, 8, 1};

EncoderConfig config(int k, int epochs, int pool, bool flip, std::uint32_t seed) {
  EncoderConfig cfg;
  cfg.k = k;
  cfg.epochs = epochs;
  cfg.public_pool_size = pool;
  cfg.sign_flip = flip;
  cfg.seed = seed;
  return cfg;
}

// The draw-order contract replayed on std::mt19937 with hand-written
// Fisher-Yates, spacing and rank-selection code.
std::vector<MixRecord> reference_records(const EncoderConfig& cfg, int n, std::size_t d) {
  std::mt19937 g(cfg.seed);
  auto shuffle = [&] {
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i >= 1; --i) {
      std::swap(p[static_cast<std::size_t>(i)],
                p[g() % static_cast<std::uint32_t>(i + 1)]);
    }
    return p;
  };
  std::vector<MixRecord> out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto p1 = shuffle();
    std::vector<int> p2;
    for (;;) {
      p2 = shuffle();
      bool clash = false;
      for (int i = 0; i < n; ++i) clash |= p1[static_cast<std::size_t>(i)] == p2[static_cast<std::size_t>(i)];
      if (!clash) break;
    }
    for (int i = 0; i < n; ++i) {
      MixRecord r;
      r.epoch = epoch;
      r.private_indices = {p1[static_cast<std::size_t>(i)], p2[static_cast<std::size_t>(i)]};
      for (;;) {
        std::vector<double> u;
        for (int j = 0; j < cfg.k - 1; ++j) u.push_back(g() / 4294967296.0);
        std::sort(u.begin(), u.end());
        u.insert(u.begin(), 0.0);
        u.push_back(1.0);
        r.lambdas.clear();
        bool ok = true;
        for (int j = 0; j < cfg.k; ++j) {
          r.lambdas.push_back(u[static_cast<std::size_t>(j) + 1] - u[static_cast<std::size_t>(j)]);
          ok = ok && r.lambdas.back() > 0;
        }
        if (ok) break;
      }
      std::vector<int> remaining(static_cast<std::size_t>(cfg.public_pool_size));
      std::iota(remaining.begin(), remaining.end(), 0);
      for (int t = 0; t < cfg.k - 2; ++t) {
        const auto j = g() % static_cast<std::uint32_t>(remaining.size());
        r.public_indices.push_back(remaining[j]);
        remaining.erase(remaining.begin() + j);
      }
      for (std::size_t j = 0; j < d; ++j) {
        const bool plus = g() < 0x80000000u;
        r.sigma.push_back(!cfg.sign_flip || plus ? 1 : -1);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

TEST(Encoder, RecordsFollowDrawOrderContract) {
  for (int k : {2, 4, 6}) {
    for (bool flip : {true, false}) {
      const auto cfg = config(k, 3, 12, flip, 1000u + static_cast<std::uint32_t>(k));
      EXPECT_EQ(plan_mix_records(cfg, 7, 20), reference_records(cfg, 7, 20))
          << "k=" << k << " flip=" << flip;
    }
  }
}

TEST(Encoder, DeterministicBitExact) {
  const auto priv = generate_synthetic(10, kShape, 5, 4);
  const auto pub = generate_public_pool(20, kShape, 4);
  const auto cfg = config(4, 5, 20, true, 77);
  const auto a = encode_dataset(priv, pub, cfg);
  const auto b = encode_dataset(priv, pub, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.encodings[i], b.encodings[i]);
    for (std::size_t j = 0; j < a.encodings[i].pixels.size(); ++j) {
      ASSERT_EQ(std::bit_cast<std::uint32_t>(a.encodings[i].pixels[j]),
                std::bit_cast<std::uint32_t>(b.encodings[i].pixels[j]));
    }
  }
  EXPECT_EQ(*a.ground_truth, *b.ground_truth);
  const auto c = encode_dataset(priv, pub, config(4, 5, 20, true, 78));
  EXPECT_NE(*a.ground_truth, *c.ground_truth);
}

TEST(Encoder, ChallengeScaleCount) {
  const auto records = plan_mix_records(config(4, 50, 200, true, 1), 100, 4);
  EXPECT_EQ(records.size(), 5000u);
}

TEST(Encoder, EveryPrivateTwicePerEpochNeverWithItself) {
  const int n = 13;
  const auto records = plan_mix_records(config(4, 6, 30, true, 5), n, 4);
  for (int epoch = 0; epoch < 6; ++epoch) {
    std::vector<int> count(n, 0);
    for (const auto& r : records) {
      if (r.epoch != epoch) continue;
      ++count[static_cast<std::size_t>(r.private_indices.first)];
      ++count[static_cast<std::size_t>(r.private_indices.second)];
      EXPECT_NE(r.private_indices.first, r.private_indices.second);
    }
    for (int c : count) EXPECT_EQ(c, 2);
  }
}

TEST(Encoder, LambdasOnSimplexAndPublicsDistinct) {
  MtState rng(8);
  for (int t = 0; t < 2000; ++t) {
    const int k = 2 + t % 7;
    const auto l = draw_lambdas(rng, k);
    ASSERT_EQ(static_cast<int>(l.size()), k);
    double s = 0;
    for (double v : l) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    const auto p = draw_public_indices(rng, k - 2, 9);
    std::vector<int> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    for (int v : p) EXPECT_TRUE(v >= 0 && v < 9);
  }
}

TEST(Encoder, XmixMatchesDirectSum) {
  MtState rng(3);
  const auto priv = generate_synthetic(2, kShape, 2, 9);
  const auto pub = generate_public_pool(2, kShape, 9);
  const std::vector<double> lambdas{0.1, 0.2, 0.3, 0.4};
  std::vector<std::int8_t> sigma(kShape.size());
  for (auto& s : sigma) s = rng.next_u32() & 1 ? 1 : -1;
  const Image out = xmix(priv.images, pub.images, lambdas, sigma);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double want = sigma[j] * (0.1 * priv.images[0][j] + 0.2 * priv.images[1][j] +
                                    0.3 * pub.images[0][j] + 0.4 * pub.images[1][j]);
    EXPECT_NEAR(out[j], want, 1e-6);
  }
  const std::vector<double> bad{0.5, 0.2, 0.2, 0.2};
  EXPECT_THROW(xmix(priv.images, pub.images, bad, sigma), InvalidArgument);
}

TEST(Encoder, LabelMassEqualsPrivateWeights) {
  const auto priv = generate_synthetic(12, kShape, 4, 2);
  const auto pub = generate_public_pool(10, kShape, 2);
  const auto ds = encode_dataset(priv, pub, config(5, 4, 10, true, 31));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = (*ds.ground_truth)[i];
    EXPECT_NEAR(ds.encodings[i].label.sum(), r.lambdas[0] + r.lambdas[1], 1e-12);
    const int ca = *priv.labels[static_cast<std::size_t>(r.private_indices.first)].one_hot_class();
    const int cb = *priv.labels[static_cast<std::size_t>(r.private_indices.second)].one_hot_class();
    if (ca != cb) {
      EXPECT_EQ(ds.encodings[i].label.probs[static_cast<std::size_t>(ca)], r.lambdas[0]);
      EXPECT_EQ(ds.encodings[i].label.probs[static_cast<std::size_t>(cb)], r.lambdas[1]);
    }
  }
}

TEST(Encoder, AbsOfFlippedEqualsUnflipped) {
  const auto priv = generate_synthetic(8, kShape, 4, 6);
  const auto pub = generate_public_pool(10, kShape, 6);
  const auto on = encode_dataset(priv, pub, config(4, 3, 10, true, 12));
  const auto off = encode_dataset(priv, pub, config(4, 3, 10, false, 12));
  for (std::size_t i = 0; i < on.size(); ++i) {
    EXPECT_TRUE(off.encodings[i].pixels.in_range(0.0f, 1.0f));
    EXPECT_EQ(abs_image(on.encodings[i].pixels), off.encodings[i].pixels);
    EXPECT_EQ(on.encodings[i].label, off.encodings[i].label);
  }
}

TEST(Encoder, LabelsIgnorePixelContent) {
  auto priv = generate_synthetic(8, kShape, 4, 6);
  const auto pub = generate_public_pool(10, kShape, 6);
  const auto a = encode_dataset(priv, pub, config(4, 3, 10, true, 12));
  for (auto& img : priv.images) {
    for (auto& p : img.pixels()) p = 1.0f - p;
  }
  const auto b = encode_dataset(priv, pub, config(4, 3, 10, true, 12));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.encodings[i].label, b.encodings[i].label);
}

TEST(Encoder, KTwoNeedsNoPool) {
  const auto priv = generate_synthetic(4, kShape, 2, 6);
  const auto ds = encode_dataset(priv, PublicPool{}, config(2, 2, 0, true, 1));
  EXPECT_EQ(ds.size(), 8u);
  for (const auto& r : *ds.ground_truth) EXPECT_TRUE(r.public_indices.empty());
}

TEST(Encoder, RejectsBadConfigs) {
  const auto priv = generate_synthetic(4, kShape, 2, 6);
  EXPECT_THROW(encode_dataset(priv, PublicPool{}, config(1, 1, 0, true, 1)), InvalidArgument);
  EXPECT_THROW(encode_dataset(priv, PublicPool{}, config(4, 1, 1, true, 1)), InvalidArgument);
  EXPECT_THROW(encode_dataset(priv, PublicPool{}, config(4, 1, 5, true, 1)), InvalidArgument);
  EXPECT_THROW(encode_dataset(priv, PublicPool{}, config(2, 0, 0, true, 1)), InvalidArgument);
}

TEST(Synthetic, BalancedDistinctAndSelfSimilar) {
  const auto priv = generate_synthetic(40, {16, 16, 1}, 10, 7);
  std::vector<int> per_class(10, 0);
  for (const auto& l : priv.labels) ++per_class[static_cast<std::size_t>(*l.one_hot_class())];
  for (int c : per_class) EXPECT_EQ(c, 4);
  double total = 0;
  int pairs = 0;
  for (std::size_t i = 0; i < priv.size(); ++i) {
    EXPECT_EQ(ssim(priv.images[i], priv.images[i]), 1.0);
    EXPECT_TRUE(priv.images[i].in_range(0.0f, 1.0f));
    for (std::size_t j = i + 1; j < priv.size(); ++j) {
      total += ssim(priv.images[i], priv.images[j]);
      ++pairs;
    }
  }
  EXPECT_LT(total / pairs, 0.3);
}

TEST(Synthetic, PublicPoolDisjointFromPrivates) {
  const auto priv = generate_synthetic(20, kShape, 4, 5);
  const auto pub = generate_public_pool(50, kShape, 5);
  for (const auto& p : pub.images) {
    for (const auto& q : priv.images) EXPECT_NE(p, q);
  }
}

}  // namespace
}  // namespace ihlab
