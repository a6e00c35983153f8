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

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "ihlab/core/types.hpp"

namespace ihlab {

// Exact min-cost max-flow with integer capacities and nonnegative integer
// costs.
//
// Primal-dual successive shortest paths: Dijkstra on reduced costs updates
// the node potentials, then a Dinic blocking flow saturates every shortest
// path at once over the zero-reduced-cost subgraph. Assignment-shaped
// networks (unit middle arcs) therefore need far fewer Dijkstra rounds than
// one per unit of flow.
class MinCostFlow {
 public:
  using Flow = std::int64_t;
  using Cost = std::int64_t;

  struct Arc {
    int to;
    Flow cap;  // residual capacity
    Cost cost;
  };

  struct Result {
    Flow flow = 0;
    Cost cost = 0;
  };

  explicit MinCostFlow(int num_nodes) : adj_(static_cast<std::size_t>(num_nodes)) {}

  int num_nodes() const { return static_cast<int>(adj_.size()); }

  // Returns an arc id usable with flow_on().
  int add_arc(int from, int to, Flow cap, Cost cost) {
    IHLAB_REQUIRE(from >= 0 && from < num_nodes() && to >= 0 && to < num_nodes(),
                  "node out of range");
    IHLAB_REQUIRE(cap >= 0, "negative capacity");
    IHLAB_REQUIRE(cost >= 0, "costs must be nonnegative, got ", cost);
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, cap, cost});
    arcs_.push_back({from, 0, -cost});
    original_cap_.push_back(cap);
    original_cap_.push_back(0);
    adj_[static_cast<std::size_t>(from)].push_back(id);
    adj_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  Flow flow_on(int arc) const {
    return original_cap_[static_cast<std::size_t>(arc)] -
           arcs_[static_cast<std::size_t>(arc)].cap;
  }

  int arc_head(int arc) const { return arcs_[static_cast<std::size_t>(arc)].to; }
  int arc_tail(int arc) const { return arcs_[static_cast<std::size_t>(arc ^ 1)].to; }
  Cost arc_cost(int arc) const { return arcs_[static_cast<std::size_t>(arc)].cost; }
  int num_arcs() const { return static_cast<int>(arcs_.size()); }  // incl. reverse

  Result solve(int source, int sink,
               Flow limit = std::numeric_limits<Flow>::max()) {
    IHLAB_REQUIRE(source != sink, "source equals sink");
    const std::size_t n = adj_.size();
    potential_.assign(n, 0);
    Result result;
    while (result.flow < limit) {
      if (!dijkstra(source, sink)) break;
      // Blocking flows on the admissible subgraph until it disconnects.
      while (result.flow < limit && bfs_levels(source, sink)) {
        iter_.assign(n, 0);
        for (;;) {
          const Flow pushed = dfs(source, sink, limit - result.flow);
          if (pushed == 0) break;
          result.flow += pushed;
          if (result.flow >= limit) break;
        }
      }
    }
    for (std::size_t a = 0; a < arcs_.size(); a += 2) {
      result.cost += flow_on(static_cast<int>(a)) * arcs_[a].cost;
    }
    return result;
  }

 private:
  static constexpr Cost kInf = std::numeric_limits<Cost>::max() / 4;

  Cost reduced(int from, const Arc& a) const {
    return a.cost + potential_[static_cast<std::size_t>(from)] -
           potential_[static_cast<std::size_t>(a.to)];
  }

  bool dijkstra(int source, int sink) {
    const std::size_t n = adj_.size();
    dist_.assign(n, kInf);
    using Item = std::pair<Cost, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist_[static_cast<std::size_t>(source)] = 0;
    heap.push({0, source});
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d != dist_[static_cast<std::size_t>(v)]) continue;
      if (d > dist_[static_cast<std::size_t>(sink)]) break;
      for (int id : adj_[static_cast<std::size_t>(v)]) {
        const Arc& a = arcs_[static_cast<std::size_t>(id)];
        if (a.cap <= 0) continue;
        const Cost nd = d + reduced(v, a);
        if (nd < dist_[static_cast<std::size_t>(a.to)]) {
          dist_[static_cast<std::size_t>(a.to)] = nd;
          heap.push({nd, a.to});
        }
      }
    }
    const Cost dt = dist_[static_cast<std::size_t>(sink)];
    if (dt >= kInf) return false;
    // Capping at dist(sink) keeps every residual reduced cost nonnegative.
    for (std::size_t v = 0; v < n; ++v) {
      potential_[v] += dist_[v] < dt ? dist_[v] : dt;
    }
    return true;
  }

  bool admissible(int from, const Arc& a) const {
    return a.cap > 0 && reduced(from, a) == 0;
  }

  bool bfs_levels(int source, int sink) {
    level_.assign(adj_.size(), -1);
    std::queue<int> q;
    level_[static_cast<std::size_t>(source)] = 0;
    q.push(source);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int id : adj_[static_cast<std::size_t>(v)]) {
        const Arc& a = arcs_[static_cast<std::size_t>(id)];
        if (admissible(v, a) && level_[static_cast<std::size_t>(a.to)] < 0) {
          level_[static_cast<std::size_t>(a.to)] =
              level_[static_cast<std::size_t>(v)] + 1;
          q.push(a.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(sink)] >= 0;
  }

  // Iterative would avoid deep recursion, but path length is bounded by the
  // BFS level of the sink (4 for assignment networks).
  Flow dfs(int v, int sink, Flow pushed) {
    if (v == sink) return pushed;
    auto& it = iter_[static_cast<std::size_t>(v)];
    const auto& edges = adj_[static_cast<std::size_t>(v)];
    for (; it < edges.size(); ++it) {
      const int id = edges[it];
      Arc& a = arcs_[static_cast<std::size_t>(id)];
      if (!admissible(v, a) || level_[static_cast<std::size_t>(a.to)] !=
                                   level_[static_cast<std::size_t>(v)] + 1) {
        continue;
      }
      const Flow got = dfs(a.to, sink, pushed < a.cap ? pushed : a.cap);
      if (got > 0) {
        a.cap -= got;
        arcs_[static_cast<std::size_t>(id ^ 1)].cap += got;
        return got;
      }
    }
    return 0;
  }

  std::vector<Arc> arcs_;
  std::vector<Flow> original_cap_;
  std::vector<std::vector<int>> adj_;
  std::vector<Cost> potential_;
  std::vector<Cost> dist_;
  std::vector<int> level_;
  std::vector<std::size_t> iter_;
};

// Square linear assignment: returns perm with row i -> column perm[i]
// minimizing the total cost. Costs must be nonnegative.
inline std::vector<int> solve_linear_assignment(
    const std::vector<std::vector<std::int64_t>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  for (const auto& row : cost) {
    IHLAB_REQUIRE(static_cast<int>(row.size()) == n, "cost matrix is not square");
  }
  MinCostFlow g(2 * n + 2);
  const int source = 2 * n;
  const int sink = 2 * n + 1;
  std::vector<std::vector<int>> arc(static_cast<std::size_t>(n),
                                    std::vector<int>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    g.add_arc(source, i, 1, 0);
    g.add_arc(n + i, sink, 1, 0);
    for (int j = 0; j < n; ++j) {
      arc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          g.add_arc(i, n + j, 1, cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }
  const auto res = g.solve(source, sink);
  if (res.flow != n) throw Error("linear assignment: no perfect matching");
  std::vector<int> perm(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (g.flow_on(arc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) > 0) {
        perm[static_cast<std::size_t>(i)] = j;
      }
    }
  }
  return perm;
}

}  // namespace ihlab
