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
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "ihlab/core/mt19937.hpp"
#include "ihlab/similarity.hpp"

namespace ihlab {
namespace {

using namespace testing;

// Encodings (other than `skip`) whose private pair includes `source`.
std::vector<int> containing(const std::vector<MixRecord>& truth, int source, int skip) {
  std::vector<int> out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto [a, b] = truth[i].private_indices;
    if (static_cast<int>(i) != skip && (a == source || b == source)) out.push_back(static_cast<int>(i));
  }
  return out;
}

TEST(Sim, SymmetricBoundedAndSignInvariant) {
  const auto s = make_setup(10, {16, 16, 1}, 4, 4, 50, 3);
  MtState rng(44);
  for (std::size_t i = 0; i < s.ds.size(); i += 3) {
    for (std::size_t j = i + 1; j < s.ds.size(); j += 5) {
      const auto& a = s.ds.encodings[i].pixels;
      const auto& b = s.ds.encodings[j].pixels;
      const double v = sim(a, b);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_EQ(v, sim(b, a));
      EXPECT_EQ(v, sim(flip_signs(a, rng), flip_signs(b, rng)));
    }
    EXPECT_NEAR(sim(s.ds.encodings[i].pixels, s.ds.encodings[i].pixels), 1.0, 1e-12);
  }
}

TEST(Sim, ConstantSignalScoresZero) {
  const auto s = make_setup(4, {8, 8, 1}, 2, 1, 0, 3, true, 7, 2);
  const Image flat({8, 8, 1}, 0.4f);
  EXPECT_EQ(sim(flat, s.ds.encodings[0].pixels), 0.0);
  const std::vector<Image> reps(4, flat);
  EXPECT_EQ(set_sim(s.ds.encodings[0].pixels, reps), 0.0);
}

TEST(SetSim, PermutationInvariantOverRepresentatives) {
  const auto s = make_setup(10, {16, 16, 1}, 4, 4, 50, 9);
  std::vector<Image> reps;
  for (int i = 0; i < 4; ++i) reps.push_back(s.ds.encodings[static_cast<std::size_t>(i * 3)].pixels);
  const double base = set_sim(s.ds.encodings[1].pixels, reps);
  std::sort(reps.begin(), reps.end(), [](const Image& a, const Image& b) { return a[0] < b[0]; });
  do {
    EXPECT_NEAR(set_sim(s.ds.encodings[1].pixels, reps), base, 1e-12);
  } while (std::next_permutation(reps.begin(), reps.end(),
                                 [](const Image& a, const Image& b) { return a[0] < b[0]; }));
}

void correct_beats_disjoint(int min_wins) {
  const auto s = make_setup(40, {16, 16, 1}, 4, 30, 200, 12345);
  const auto& truth = *s.ds.ground_truth;
  MtState rng(5);
  const int trials = 400;
  std::vector<int> encs;
  std::vector<std::vector<int>> reps;
  for (int t = 0; t < trials; ++t) {
    const int e = static_cast<int>(rng.bounded(static_cast<std::uint32_t>(s.ds.size())));
    const auto [a, b] = truth[static_cast<std::size_t>(e)].private_indices;
    int c;
    do {
      c = static_cast<int>(rng.bounded(40));
    } while (c == a || c == b);
    for (int source : {a, c}) {
      auto pool = containing(truth, source, e);
      if (source == c) {
        // A disjoint set shares no source with e.
        std::erase_if(pool, [&](int r) {
          const auto [p, q] = truth[static_cast<std::size_t>(r)].private_indices;
          return p == a || p == b || q == a || q == b;
        });
      }
      std::vector<int> pick;
      for (int r = 0; r < 4; ++r) {
        const auto j = rng.bounded(static_cast<std::uint32_t>(pool.size()));
        pick.push_back(pool[j]);
        pool.erase(pool.begin() + j);
      }
      reps.push_back(pick);
    }
    encs.push_back(e);
  }
  SimilarityOptions opts;
  const auto g = CorrelationSimilarity(opts).set_graph(s.ds, reps, 0);
  int wins = 0;
  for (int t = 0; t < trials; ++t) {
    const auto e = static_cast<std::size_t>(encs[static_cast<std::size_t>(t)]);
    wins += g.at(2 * static_cast<std::size_t>(t), e) > g.at(2 * static_cast<std::size_t>(t) + 1, e);
  }
  EXPECT_GE(wins, min_wins) << wins << " of " << trials;
}

TEST(SetSim, CorrectSetBeatsDisjointSet) { correct_beats_disjoint(360); }

TEST(SimilarityGraph, SymmetricZeroDiagonalThreadIndependent) {
  const auto s = make_setup(12, {16, 16, 1}, 4, 6, 50, 21);
  SimilarityOptions one;
  one.threads = 1;
  SimilarityOptions many;
  many.threads = 4;
  const auto g1 = build_similarity_graph(s.ds, one);
  const auto g4 = build_similarity_graph(s.ds, many);
  ASSERT_EQ(g1.size(), s.ds.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_EQ(g1.at(i, i), 0.0f);
    for (std::size_t j = 0; j < g1.size(); ++j) {
      EXPECT_EQ(g1.at(i, j), g1.at(j, i));
      EXPECT_GE(g1.at(i, j), 0.0f);
      EXPECT_LE(g1.at(i, j), 1.0f);
      EXPECT_EQ(g1.at(i, j), g4.at(i, j));
    }
  }
}

TEST(SimilarityGraph, SharedSourcesScoreHigherOnAverage) {
  const auto s = make_setup(20, {16, 16, 1}, 4, 10, 100, 8);
  const auto g = build_similarity_graph(s.ds);
  const auto& truth = *s.ds.ground_truth;
  double share = 0, apart = 0;
  int ns = 0, na = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      if (GroundTruthSimilarity::share(truth[i], truth[j])) {
        share += g.at(i, j);
        ++ns;
      } else {
        apart += g.at(i, j);
        ++na;
      }
    }
  }
  EXPECT_GT(share / ns, apart / na + 0.05);
}

TEST(GroundTruthSimilarity, MatchesSourceIntersection) {
  const auto s = make_setup(6, {8, 8, 1}, 2, 3, 0, 1, true, 7, 3);
  const GroundTruthSimilarity oracle(*s.ds.ground_truth);
  const auto g = oracle.graph(s.ds, 1);
  const auto& t = *s.ds.ground_truth;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (i == j) continue;
      const bool hit = t[i].private_indices.first == t[j].private_indices.first ||
                       t[i].private_indices.first == t[j].private_indices.second ||
                       t[i].private_indices.second == t[j].private_indices.first ||
                       t[i].private_indices.second == t[j].private_indices.second;
      EXPECT_EQ(g.at(i, j), hit ? 1.0f : 0.0f);
    }
  }
}

TEST(Labels, SupportAndOverlap) {
  LabelVector a{{0.6, 0.4, 0.0}}, b{{0.0, 0.3, 0.2}}, c{{0.0, 0.0, 1.0}};
  EXPECT_EQ(label_support(a), (std::vector<int>{0, 1}));
  EXPECT_TRUE(labels_overlap(a, b));
  EXPECT_FALSE(labels_overlap(a, c));
}

}  // namespace
}  // namespace ihlab
