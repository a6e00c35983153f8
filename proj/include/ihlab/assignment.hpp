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

// Encoding-to-source assignment. Every encoding goes to exactly two recovered
// sets and every set receives exactly 2N encodings; the cheapest such
// assignment under cost 1 - setSim is found with one exact min-cost flow.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "ihlab/clustering.hpp"
#include "ihlab/core/mt19937.hpp"
#include "ihlab/core/types.hpp"
#include "ihlab/flow.hpp"
#include "ihlab/similarity.hpp"

namespace ihlab {

inline constexpr double kCostScale = 1e6;

struct AssignmentMap {
  // Per encoding: the two assigned sets (ascending) and the lambda paired with
  // each. Lambdas stay zero until pair_lambdas has run.
  std::vector<std::array<int, 2>> sets;
  std::vector<std::array<double, 2>> lambdas;
  std::int64_t cost = 0;

  std::size_t size() const { return sets.size(); }

  void write_csv(std::ostream& out) const {
    out << "encoding_index,set_a,set_b,lambda_a,lambda_b\n";
    for (std::size_t i = 0; i < sets.size(); ++i) {
      out << i << ',' << sets[i][0] << ',' << sets[i][1] << ','
          << lambdas[i][0] << ',' << lambdas[i][1] << '\n';
    }
  }
};

inline std::int64_t similarity_cost(double s) {
  return std::llround(kCostScale * (1.0 - std::clamp(s, 0.0, 1.0)));
}

// Network: source -> set (cap 2N), set -> encoding (cap 1, cost
// round(1e6 (1 - setSim))), encoding -> sink (cap 2). Needs flow 2|E|.
inline AssignmentMap solve_assignment(const SetSimilarityGraph& set_sim,
                                      int epochs, int num_sets,
                                      int num_encodings) {
  IHLAB_REQUIRE(epochs >= 1 && num_sets >= 2 && num_encodings >= 1,
                "bad sizes N=", epochs, " |X|=", num_sets, " |E|=", num_encodings);
  IHLAB_REQUIRE(static_cast<long long>(num_encodings) ==
                    static_cast<long long>(epochs) * num_sets,
                "|E| = ", num_encodings, " but N * |X| = ", epochs * num_sets);
  IHLAB_REQUIRE(set_sim.num_sets() == static_cast<std::size_t>(num_sets) &&
                    set_sim.num_encodings() == static_cast<std::size_t>(num_encodings),
                "set similarity graph is ", set_sim.num_sets(), "x",
                set_sim.num_encodings());
  const int source = num_sets + num_encodings;
  const int sink = source + 1;
  MinCostFlow net(sink + 1);
  for (int s = 0; s < num_sets; ++s) net.add_arc(source, s, 2 * epochs, 0);
  std::vector<int> first_arc(static_cast<std::size_t>(num_sets));
  for (int s = 0; s < num_sets; ++s) {
    for (int e = 0; e < num_encodings; ++e) {
      const int id = net.add_arc(
          s, num_sets + e, 1,
          similarity_cost(set_sim.at(static_cast<std::size_t>(s), static_cast<std::size_t>(e))));
      if (e == 0) first_arc[static_cast<std::size_t>(s)] = id;
    }
  }
  for (int e = 0; e < num_encodings; ++e) net.add_arc(num_sets + e, sink, 2, 0);

  const auto res = net.solve(source, sink);
  const long long want = 2LL * num_encodings;
  if (res.flow != want) {
    throw Error(detail::concat("assignment network infeasible: routed ", res.flow,
                               " of ", want, " units (|X|=", num_sets,
                               ", N=", epochs, ", |E|=", num_encodings, ")"));
  }

  AssignmentMap map;
  map.sets.assign(static_cast<std::size_t>(num_encodings), {-1, -1});
  map.lambdas.assign(static_cast<std::size_t>(num_encodings), {0.0, 0.0});
  map.cost = res.cost;
  for (int s = 0; s < num_sets; ++s) {
    for (int e = 0; e < num_encodings; ++e) {
      // Middle arcs were added consecutively, two slots per arc.
      if (net.flow_on(first_arc[static_cast<std::size_t>(s)] + 2 * e) == 0) continue;
      auto& slot = map.sets[static_cast<std::size_t>(e)];
      (slot[0] < 0 ? slot[0] : slot[1]) = s;
    }
  }
  return map;
}

// Up to `count` members of each clique, drawn without replacement.
inline std::vector<std::vector<int>> choose_representatives(
    const std::vector<CliqueSet>& cliques, int count, std::uint32_t seed) {
  IHLAB_REQUIRE(count >= 1, "need at least one representative");
  MtState rng(seed);
  std::vector<std::vector<int>> reps;
  for (const auto& c : cliques) {
    IHLAB_REQUIRE(!c.members.empty(), "empty clique");
    auto pool = c.sorted();
    std::vector<int> pick;
    const int take = std::min<int>(count, static_cast<int>(pool.size()));
    for (int t = 0; t < take; ++t) {
      const auto j = rng.bounded(static_cast<std::uint32_t>(pool.size()));
      pick.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    std::sort(pick.begin(), pick.end());
    reps.push_back(std::move(pick));
  }
  return reps;
}

namespace assignment_detail {

// Sum of squared residuals of |e| - la*A - lb*B after removing the best
// constant offset.
inline double offset_residual(const Image& e, const Image& a, const Image& b,
                              double la, double lb) {
  const std::size_t n = e.size();
  double mean = 0.0;
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = std::fabs(e[i]) - la * a[i] - lb * b[i];
    mean += r[i];
  }
  mean /= static_cast<double>(n);
  double sse = 0.0;
  for (double v : r) sse += (v - mean) * (v - mean);
  return sse;
}

}  // namespace assignment_detail

// Orders an unordered lambda pair to the encoding's two sets. Returns
// {lambda for sets[0], lambda for sets[1]}.
inline std::array<double, 2> pair_lambdas(const Image& encoding,
                                          std::array<int, 2> sets,
                                          std::array<double, 2> lambdas,
                                          std::span<const Image> abs_means,
                                          std::array<double, 2> set_sims) {
  const Image& a = abs_means[static_cast<std::size_t>(sets[0])];
  const Image& b = abs_means[static_cast<std::size_t>(sets[1])];
  IHLAB_REQUIRE(a.shape() == encoding.shape() && b.shape() == encoding.shape(),
                "shape mismatch");
  const double r_keep =
      assignment_detail::offset_residual(encoding, a, b, lambdas[0], lambdas[1]);
  const double r_swap =
      assignment_detail::offset_residual(encoding, a, b, lambdas[1], lambdas[0]);
  const double scale = std::max({1.0, r_keep, r_swap});
  if (std::fabs(r_keep - r_swap) > 1e-12 * scale) {
    return r_keep < r_swap ? lambdas : std::array<double, 2>{lambdas[1], lambdas[0]};
  }
  // Tie: larger lambda to the set with higher setSim (set 0 on equal sims).
  const double hi = std::max(lambdas[0], lambdas[1]);
  const double lo = std::min(lambdas[0], lambdas[1]);
  return set_sims[1] > set_sims[0] ? std::array<double, 2>{lo, hi}
                                   : std::array<double, 2>{hi, lo};
}

}  // namespace ihlab
