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
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "ihlab/assignment.hpp"
#include "ihlab/core/mt19937.hpp"

namespace ihlab {
namespace {

TEST(PairLambdas, PlantedOrderIsRecovered) {
  const auto priv = generate_synthetic(4, {16, 16, 1}, 4, 3);
  const std::vector<Image> means = priv.images;
  MtState rng(2);
  for (int t = 0; t < 50; ++t) {
    const int a = static_cast<int>(rng.bounded(4));
    int b;
    do {
      b = static_cast<int>(rng.bounded(4));
    } while (b == a);
    Image e({16, 16, 1});
    for (std::size_t j = 0; j < e.size(); ++j) {
      e[j] = static_cast<float>((0.7 * means[static_cast<std::size_t>(a)][j] +
                                 0.3 * means[static_cast<std::size_t>(b)][j]) *
                                (rng.next_u32() & 1 ? 1 : -1));
    }
    const std::array<int, 2> sets{std::min(a, b), std::max(a, b)};
    const auto got = pair_lambdas(e, sets, {0.3, 0.7}, means, {0.5, 0.5});
    const double want_first = sets[0] == a ? 0.7 : 0.3;
    EXPECT_EQ(got[0], want_first);
    EXPECT_EQ(got[0] + got[1], 1.0);
  }
}

TEST(PairLambdas, TiesFallBackToSetSimilarity) {
  const Image flat({4, 4, 1}, 0.5f);
  const std::vector<Image> means{flat, flat};
  EXPECT_EQ(pair_lambdas(flat, {0, 1}, {0.2, 0.6}, means, {0.1, 0.9}),
            (std::array<double, 2>{0.2, 0.6}));
  EXPECT_EQ(pair_lambdas(flat, {0, 1}, {0.2, 0.6}, means, {0.9, 0.1}),
            (std::array<double, 2>{0.6, 0.2}));
  EXPECT_EQ(pair_lambdas(flat, {0, 1}, {0.5, 0.5}, means, {0.3, 0.3}),
            (std::array<double, 2>{0.5, 0.5}));
}

TEST(Representatives, DistinctMembersDeterministic) {
  std::vector<CliqueSet> cliques = {{{4, 1, 9, 7, 3}}, {{2, 8}}, {{5, 6, 0, 11}}};
  const auto a = choose_representatives(cliques, 4, 10);
  const auto b = choose_representatives(cliques, 4, 10);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].size(), 4u);
  EXPECT_EQ(a[1], (std::vector<int>{2, 8}));
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_TRUE(std::is_sorted(a[c].begin(), a[c].end()));
    EXPECT_EQ(std::set<int>(a[c].begin(), a[c].end()).size(), a[c].size());
    for (int m : a[c]) EXPECT_TRUE(cliques[c].contains(m));
  }
}

TEST(Assignment, OracleSetSimilarityRecoversPairs) {
  const auto s = testing::make_setup(10, {8, 8, 1}, 4, 6, 20, 3, true, 7, 5);
  const auto& truth = *s.ds.ground_truth;
  std::vector<std::vector<int>> reps(10);
  for (std::size_t e = 0; e < truth.size() && e < 1000; ++e) {
    for (int src : {truth[e].private_indices.first, truth[e].private_indices.second}) {
      // Two representatives per source whose other members differ.
      auto& r = reps[static_cast<std::size_t>(src)];
      if (r.size() < 2) r.push_back(static_cast<int>(e));
    }
  }
  const GroundTruthSimilarity oracle(truth);
  const auto g = oracle.set_graph(s.ds, reps, 1);
  const auto map = solve_assignment(g, 6, 10, 60);
  EXPECT_EQ(map.cost, 0);
  for (std::size_t e = 0; e < truth.size(); ++e) {
    auto [a, b] = truth[e].private_indices;
    if (a > b) std::swap(a, b);
    EXPECT_EQ(map.sets[e], (std::array<int, 2>{a, b}));
  }
  std::ostringstream csv;
  map.write_csv(csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "encoding_index,set_a,set_b,lambda_a,lambda_b");
}

}  // namespace
}  // namespace ihlab
