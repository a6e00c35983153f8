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
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "ihlab/assignment.hpp"
#include "ihlab/core/mt19937.hpp"
#include "ihlab/flow.hpp"

namespace ihlab {
namespace {

using namespace testing;

struct Edge {
  int from, to;
  std::int64_t cap, cost;
};

// Textbook successive shortest paths with Bellman-Ford on an edge list.
std::pair<std::int64_t, std::int64_t> bellman_ford_mcmf(int n, const std::vector<Edge>& edges,
                                                        int s, int t) {
  struct R {
    int to;
    std::int64_t cap, cost;
  };
  std::vector<R> r;
  for (const auto& e : edges) {
    r.push_back({e.to, e.cap, e.cost});
    r.push_back({e.from, 0, -e.cost});
  }
  std::vector<int> tail;
  for (const auto& e : edges) {
    tail.push_back(e.from);
    tail.push_back(e.to);
  }
  std::int64_t flow = 0, cost = 0;
  const auto inf = std::numeric_limits<std::int64_t>::max() / 4;
  for (;;) {
    std::vector<std::int64_t> dist(static_cast<std::size_t>(n), inf);
    std::vector<int> via(static_cast<std::size_t>(n), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    for (int round = 0; round < n; ++round) {
      for (std::size_t a = 0; a < r.size(); ++a) {
        const auto u = static_cast<std::size_t>(tail[a]);
        if (r[a].cap > 0 && dist[u] < inf && dist[u] + r[a].cost < dist[static_cast<std::size_t>(r[a].to)]) {
          dist[static_cast<std::size_t>(r[a].to)] = dist[u] + r[a].cost;
          via[static_cast<std::size_t>(r[a].to)] = static_cast<int>(a);
        }
      }
    }
    if (dist[static_cast<std::size_t>(t)] >= inf) break;
    std::int64_t push = inf;
    for (int v = t; v != s; v = tail[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])]) {
      push = std::min(push, r[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])].cap);
    }
    for (int v = t; v != s; v = tail[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])]) {
      const auto a = static_cast<std::size_t>(via[static_cast<std::size_t>(v)]);
      r[a].cap -= push;
      r[a ^ 1].cap += push;
    }
    flow += push;
    cost += push * dist[static_cast<std::size_t>(t)];
  }
  return {flow, cost};
}

TEST(MinCostFlow, MatchesBellmanFordOnRandomGraphs) {
  MtState rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + static_cast<int>(rng.bounded(8));
    const int m = static_cast<int>(rng.bounded(30));
    std::vector<Edge> edges;
    MinCostFlow g(n);
    for (int i = 0; i < m; ++i) {
      Edge e{static_cast<int>(rng.bounded(static_cast<std::uint32_t>(n))),
             static_cast<int>(rng.bounded(static_cast<std::uint32_t>(n))),
             static_cast<std::int64_t>(rng.bounded(5)),
             static_cast<std::int64_t>(rng.bounded(20))};
      if (e.from == e.to) continue;
      edges.push_back(e);
      g.add_arc(e.from, e.to, e.cap, e.cost);
    }
    const auto want = bellman_ford_mcmf(n, edges, 0, n - 1);
    const auto got = g.solve(0, n - 1);
    ASSERT_EQ(got.flow, want.first) << "trial " << trial;
    ASSERT_EQ(got.cost, want.second) << "trial " << trial;
    // Conservation and capacity on the reported arc flows.
    std::vector<std::int64_t> net(static_cast<std::size_t>(n), 0);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto f = g.flow_on(static_cast<int>(2 * i));
      ASSERT_GE(f, 0);
      ASSERT_LE(f, edges[i].cap);
      net[static_cast<std::size_t>(edges[i].from)] -= f;
      net[static_cast<std::size_t>(edges[i].to)] += f;
    }
    for (int v = 1; v + 1 < n; ++v) ASSERT_EQ(net[static_cast<std::size_t>(v)], 0);
    ASSERT_EQ(net[static_cast<std::size_t>(n - 1)], got.flow);
  }
}

TEST(MinCostFlow, RejectsNegativeCostAndCapacity) {
  MinCostFlow g(2);
  EXPECT_THROW(g.add_arc(0, 1, 1, -1), InvalidArgument);
  EXPECT_THROW(g.add_arc(0, 1, -1, 0), InvalidArgument);
  EXPECT_THROW(g.add_arc(0, 2, 1, 0), InvalidArgument);
}

TEST(LinearAssignment, MatchesPermutationEnumeration) {
  MtState rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(7));
    std::vector<std::vector<std::int64_t>> cost(static_cast<std::size_t>(n),
                                                std::vector<std::int64_t>(static_cast<std::size_t>(n)));
    for (auto& row : cost) {
      for (auto& c : row) c = rng.bounded(100);
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    do {
      std::int64_t total = 0;
      for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto got = solve_linear_assignment(cost);
    std::vector<int> seen = got;
    std::sort(seen.begin(), seen.end());
    for (int i = 0; i < n; ++i) ASSERT_EQ(seen[static_cast<std::size_t>(i)], i);
    std::int64_t total = 0;
    for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(got[static_cast<std::size_t>(i)])];
    ASSERT_EQ(total, best);
  }
}

TEST(Assignment, OptimalAgainstExhaustiveSearch) {
  MtState rng(17);
  const int shapes[][2] = {{3, 1}, {3, 2}, {4, 1}, {4, 2}, {5, 1}, {6, 1}};
  for (const auto& sh : shapes) {
    for (int trial = 0; trial < 6; ++trial) {
      const int sets = sh[0], epochs = sh[1];
      const auto g = random_set_graph(rng, sets, sets * epochs);
      const auto map = solve_assignment(g, epochs, sets, sets * epochs);
      EXPECT_EQ(map.cost, brute_force_assignment(g, epochs))
          << "|X|=" << sets << " N=" << epochs;
    }
  }
}

TEST(Assignment, DegreeConstraintsOnRandomInstances) {
  MtState rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const int sets = 2 + static_cast<int>(rng.bounded(9));
    const int epochs = 1 + static_cast<int>(rng.bounded(4));
    const int encs = sets * epochs;
    const auto g = random_set_graph(rng, sets, encs);
    const auto map = solve_assignment(g, epochs, sets, encs);
    std::vector<int> load(static_cast<std::size_t>(sets), 0);
    std::int64_t cost = 0;
    for (int e = 0; e < encs; ++e) {
      const auto [a, b] = map.sets[static_cast<std::size_t>(e)];
      ASSERT_TRUE(a >= 0 && a < b && b < sets) << a << ' ' << b;
      ++load[static_cast<std::size_t>(a)];
      ++load[static_cast<std::size_t>(b)];
      cost += similarity_cost(g.at(static_cast<std::size_t>(a), static_cast<std::size_t>(e))) +
              similarity_cost(g.at(static_cast<std::size_t>(b), static_cast<std::size_t>(e)));
    }
    for (int l : load) ASSERT_EQ(l, 2 * epochs);
    ASSERT_EQ(cost, map.cost);
  }
}

TEST(Assignment, RejectsInconsistentSizes) {
  SetSimilarityGraph g(3, 6);
  EXPECT_THROW(solve_assignment(g, 2, 3, 5), InvalidArgument);
  EXPECT_THROW(solve_assignment(g, 1, 3, 6), InvalidArgument);
}

}  // namespace
}  // namespace ihlab
