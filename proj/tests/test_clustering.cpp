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
#include <set>
#include <vector>

#include "fixtures.hpp"
#include "ihlab/clustering.hpp"
#include "ihlab/similarity.hpp"

namespace ihlab {
namespace {

using testing::make_setup;

// Sources common to every member of the set.
std::vector<int> common_sources(const std::vector<MixRecord>& truth, const CliqueSet& s) {
  const auto& first = truth[static_cast<std::size_t>(s.members[0])].private_indices;
  std::vector<int> common{first.first, first.second};
  for (int m : s.members) {
    const auto [p, q] = truth[static_cast<std::size_t>(m)].private_indices;
    std::erase_if(common, [&](int c) { return c != p && c != q; });
  }
  return common;
}

TEST(Jaccard, DirectFormula) {
  EXPECT_DOUBLE_EQ(jaccard_distance({1, 2}, {2, 3}), 1.0 - 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(jaccard_distance({1, 2, 5}, {1, 2, 5}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard_distance({1}, {2}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard_distance({}, {}), 0.0);
}

TEST(Insert, ArgmaxAndLowestIndexTie) {
  SimilarityGraph g(5);
  g.set(0, 3, 0.9f);
  g.set(0, 1, 0.4f);
  EXPECT_EQ(insert(CliqueSet{{0}}, g).members, (std::vector<int>{0, 3}));
  SimilarityGraph tie(5);
  tie.set(0, 2, 0.5f);
  tie.set(0, 4, 0.5f);
  EXPECT_EQ(insert(CliqueSet{{0}}, tie).members, (std::vector<int>{0, 2}));
  // Scores add over the members of the set.
  SimilarityGraph sum(5);
  sum.set(0, 1, 0.6f);
  sum.set(0, 2, 0.5f);
  sum.set(3, 2, 0.5f);
  EXPECT_EQ(insert(CliqueSet{{0, 3}}, sum).members, (std::vector<int>{0, 3, 2}));
  EXPECT_THROW(insert(CliqueSet{{0, 1, 2, 3, 4}}, g), InvalidArgument);
  EXPECT_THROW(insert(CliqueSet{}, g), InvalidArgument);
}

TEST(Create, MatchesRepeatedInsert) {
  const auto s = make_setup(16, {16, 16, 1}, 4, 8, 50, 4);
  const auto g = build_similarity_graph(s.ds);
  for (int seed = 0; seed < static_cast<int>(g.size()); seed += 7) {
    for (int m : {0, 1, 2, 5}) {
      CliqueSet step{{seed}};
      for (int i = 0; i < m; ++i) step = insert(step, g);
      const auto made = create(seed, m, g);
      EXPECT_EQ(made.members, step.members);
      EXPECT_EQ(made.size(), static_cast<std::size_t>(m + 1));
      EXPECT_EQ(std::set<int>(made.members.begin(), made.members.end()).size(), made.size());
    }
  }
  EXPECT_EQ(default_clique_growth(30), 7);
  EXPECT_EQ(default_clique_growth(2), 1);
  EXPECT_THROW(create(0, static_cast<int>(g.size()), g), InvalidArgument);
}

TEST(ClusterSets, RecoversDuplicatedFamilies) {
  std::vector<CliqueSet> distinct = {{{0, 1, 2}}, {{3, 4, 5}}, {{6, 7, 8}}, {{1, 4, 7}}, {{2, 5, 8, 9}}};
  std::vector<CliqueSet> all;
  for (int copy = 0; copy < 6; ++copy) {
    for (const auto& d : distinct) {
      CliqueSet c = d;
      std::rotate(c.members.begin(), c.members.begin() + copy % static_cast<int>(c.size()), c.members.end());
      all.push_back(c);
    }
  }
  const auto res = cluster_sets(all, 5);
  std::set<std::vector<int>> got;
  for (int m : res.medoids) got.insert(all[static_cast<std::size_t>(m)].sorted());
  std::set<std::vector<int>> want;
  for (const auto& d : distinct) want.insert(d.sorted());
  EXPECT_EQ(got, want);
}

TEST(ClusterSets, DistinctMedoidsAndMonotoneCost) {
  const auto s = make_setup(20, {16, 16, 1}, 4, 12, 100, 11);
  const auto g = build_similarity_graph(s.ds);
  const auto sets = create_all(g, default_clique_growth(12));
  const auto res = cluster_sets(sets, 20);
  ASSERT_EQ(res.medoids.size(), 20u);
  std::set<std::vector<int>> distinct;
  for (int m : res.medoids) distinct.insert(sets[static_cast<std::size_t>(m)].sorted());
  EXPECT_EQ(distinct.size(), 20u);
  for (std::size_t i = 1; i < res.cost_trace.size(); ++i) {
    EXPECT_LE(res.cost_trace[i], res.cost_trace[i - 1] + 1e-9);
  }
  EXPECT_LE(res.iterations, 50);
  EXPECT_THROW(cluster_sets(sets, static_cast<int>(sets.size()) + 1), InvalidArgument);
}

TEST(ClusterSets, OracleSimilarityGivesSharedSource) {
  const auto s = make_setup(20, {8, 8, 1}, 4, 12, 20, 13);
  const GroundTruthSimilarity oracle(*s.ds.ground_truth);
  const auto g = oracle.graph(s.ds, 0);
  const auto sets = create_all(g, default_clique_growth(12));
  const auto res = cluster_sets(sets, 20);
  for (int m : res.medoids) {
    EXPECT_FALSE(common_sources(*s.ds.ground_truth, sets[static_cast<std::size_t>(m)]).empty());
  }
}

TEST(Clustering, FirstInsertSharesSeedSource) {
  const auto s = make_setup(40, {16, 16, 1}, 4, 30, 200, 12345);
  const auto g = build_similarity_graph(s.ds);
  const auto& truth = *s.ds.ground_truth;
  int hits = 0;
  for (std::size_t e = 0; e < g.size(); ++e) {
    const auto grown = insert(CliqueSet{{static_cast<int>(e)}}, g);
    hits += !common_sources(truth, grown).empty();
  }
  EXPECT_GE(hits, static_cast<int>(g.size() * 95 / 100)) << hits << " of " << g.size();
}

TEST(Clustering, CreatedSetsShareASource) {
  const auto s = make_setup(40, {16, 16, 1}, 4, 30, 200, 12345);
  const auto g = build_similarity_graph(s.ds);
  const auto sets = create_all(g, default_clique_growth(30));
  int hits = 0;
  for (const auto& t : sets) hits += !common_sources(*s.ds.ground_truth, t).empty();
  EXPECT_GE(hits, static_cast<int>(sets.size() * 9 / 10)) << hits << " of " << sets.size();
}

}  // namespace
}  // namespace ihlab
