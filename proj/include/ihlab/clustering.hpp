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

// Clique recovery: grow a near-clique around every encoding with greedy
// inserts, then k-medoids over those sets (Jaccard distance) to pick one
// representative clique per private image.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ihlab/core/parallel.hpp"
#include "ihlab/core/types.hpp"
#include "ihlab/similarity.hpp"

namespace ihlab {

// Encoding indices in insertion order.
struct CliqueSet {
  std::vector<int> members;

  std::size_t size() const { return members.size(); }
  bool contains(int e) const {
    return std::find(members.begin(), members.end(), e) != members.end();
  }
  std::vector<int> sorted() const {
    auto s = members;
    std::sort(s.begin(), s.end());
    return s;
  }
};

// M = floor(N/4), at least 1.
inline int default_clique_growth(int epochs) { return std::max(1, epochs / 4); }

namespace clustering_detail {

// Adds argmax_{e not in S} score[e]; ties go to the lowest index.
inline int best_candidate(const std::vector<double>& score,
                          const std::vector<char>& in_set) {
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < score.size(); ++e) {
    if (in_set[e]) continue;
    if (score[e] > best_score) {
      best_score = score[e];
      best = static_cast<int>(e);
    }
  }
  return best;
}

// Applies the single medoid exchange that lowers the total distance the most,
// if any does. Uses nearest and second-nearest medoid distances so every
// (candidate, medoid) pair is scored in one pass over the sets.
template <class Dist>
bool best_swap(std::size_t n, int k, const Dist& dist, std::vector<int>& medoids,
               int threads) {
  std::vector<double> d1(n), d2(n);
  std::vector<int> near(n);
  std::vector<char> is_medoid(n, 0);
  for (int m : medoids) is_medoid[static_cast<std::size_t>(m)] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    d1[i] = d2[i] = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = dist(i, static_cast<std::size_t>(medoids[static_cast<std::size_t>(c)]));
      if (d < d1[i]) {
        d2[i] = d1[i];
        d1[i] = d;
        near[i] = c;
      } else if (d < d2[i]) {
        d2[i] = d;
      }
    }
  }
  std::vector<double> gain(n, 0.0);
  std::vector<int> slot(n, -1);
  parallel_for(n, threads, [&](std::size_t x) {
    if (is_medoid[x]) return;
    double shared = 0.0;
    std::vector<double> delta(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = dist(i, x);
      const double keep = std::min(dx - d1[i], 0.0);
      shared += keep;
      delta[static_cast<std::size_t>(near[i])] += std::min(dx, d2[i]) - d1[i] - keep;
    }
    double best = 0.0;
    for (int c = 0; c < k; ++c) {
      const double total = shared + delta[static_cast<std::size_t>(c)];
      if (total < best) {
        best = total;
        slot[x] = c;
      }
    }
    gain[x] = -best;
  });
  std::size_t pick = n;
  double most = 1e-9;
  for (std::size_t x = 0; x < n; ++x) {
    if (slot[x] >= 0 && gain[x] > most) {
      most = gain[x];
      pick = x;
    }
  }
  if (pick == n) return false;
  medoids[static_cast<std::size_t>(slot[pick])] = static_cast<int>(pick);
  return true;
}

}  // namespace clustering_detail

// S u {argmax_{e not in S} sum_{u in S} weight(e, u)}.
inline CliqueSet insert(const CliqueSet& s, const SimilarityGraph& g) {
  IHLAB_REQUIRE(!s.members.empty(), "set is empty");
  IHLAB_REQUIRE(s.size() < g.size(), "set already holds every encoding");
  std::vector<double> score(g.size(), 0.0);
  std::vector<char> in_set(g.size(), 0);
  for (int u : s.members) {
    IHLAB_REQUIRE(u >= 0 && static_cast<std::size_t>(u) < g.size(),
                  "member ", u, " out of range");
    in_set[static_cast<std::size_t>(u)] = 1;
    const auto row = g.row(static_cast<std::size_t>(u));
    for (std::size_t e = 0; e < g.size(); ++e) score[e] += row[e];
  }
  CliqueSet out = s;
  out.members.push_back(clustering_detail::best_candidate(score, in_set));
  return out;
}

// M successive inserts from {seed}; scores are updated incrementally.
inline CliqueSet create(int seed, int growth, const SimilarityGraph& g) {
  IHLAB_REQUIRE(growth >= 0, "negative growth");
  IHLAB_REQUIRE(static_cast<std::size_t>(growth) < g.size(), "growth ", growth,
                " must be below |E| = ", g.size());
  IHLAB_REQUIRE(seed >= 0 && static_cast<std::size_t>(seed) < g.size(),
                "seed out of range");
  std::vector<double> score(g.size(), 0.0);
  std::vector<char> in_set(g.size(), 0);
  CliqueSet s;
  int added = seed;
  for (int step = 0;; ++step) {
    s.members.push_back(added);
    in_set[static_cast<std::size_t>(added)] = 1;
    if (step == growth) break;
    const auto row = g.row(static_cast<std::size_t>(added));
    for (std::size_t e = 0; e < g.size(); ++e) score[e] += row[e];
    added = clustering_detail::best_candidate(score, in_set);
  }
  return s;
}

// T_i = create({e_i}, M) for every encoding.
inline std::vector<CliqueSet> create_all(const SimilarityGraph& g, int growth,
                                         int threads = 0) {
  std::vector<CliqueSet> out(g.size());
  parallel_for(g.size(), threads, [&](std::size_t i) {
    out[i] = create(static_cast<int>(i), growth, g);
  });
  return out;
}

// 1 - |s n t| / |s u t| on sorted member lists.
inline double jaccard_distance(const std::vector<int>& s, const std::vector<int>& t) {
  std::size_t i = 0, j = 0, inter = 0;
  while (i < s.size() && j < t.size()) {
    if (s[i] == t[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (s[i] < t[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = s.size() + t.size() - inter;
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

struct SetClustering {
  std::vector<int> medoids;          // index into the input sets, one per cluster
  std::vector<int> assignment;       // input set -> cluster
  std::vector<double> cost_trace;    // total within-cluster distance per iteration
  int iterations = 0;
};

// k-medoids over sets under Jaccard distance. Seeding: first set, then
// farthest-point traversal. At each fixed point of the alternating step the
// best single medoid exchange is applied (when `swap`), until none helps or
// max_iterations alternating steps have run.
// Each exchange strictly lowers the total, so the loop terminates.
inline SetClustering cluster_sets(const std::vector<CliqueSet>& sets,
                                  int num_clusters, int max_iterations = 50,
                                  int threads = 0, bool swap = true) {
  IHLAB_REQUIRE(num_clusters >= 1, "need at least one cluster");
  IHLAB_REQUIRE(static_cast<std::size_t>(num_clusters) <= sets.size(),
                "num_clusters ", num_clusters, " exceeds ", sets.size(), " sets");
  const std::size_t n = sets.size();
  std::vector<std::vector<int>> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = sets[i].sorted();
  auto dist = [&](std::size_t a, std::size_t b) {
    return jaccard_distance(sorted[a], sorted[b]);
  };

  SetClustering out;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  std::size_t pick = 0;
  for (int c = 0; c < num_clusters; ++c) {
    out.medoids.push_back(static_cast<int>(pick));
    chosen[pick] = 1;
    parallel_for(n, threads, [&](std::size_t i) {
      nearest[i] = std::min(nearest[i], dist(i, pick));
    });
    // Farthest unchosen set; on ties (including all-zero distance when fewer
    // distinct sets than clusters exist) the lowest index wins.
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i] && nearest[i] > far) {
        far = nearest[i];
        pick = i;
      }
    }
  }

  out.assignment.assign(n, 0);
  auto assign_all = [&] {
    std::vector<double> d(n);
    parallel_for(n, threads, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < num_clusters; ++c) {
        const double dc = dist(i, static_cast<std::size_t>(out.medoids[static_cast<std::size_t>(c)]));
        if (dc < best) {
          best = dc;
          arg = c;
        }
      }
      out.assignment[i] = arg;
      d[i] = best;
    });
    double total = 0.0;
    for (double v : d) total += v;
    return total;
  };

  out.cost_trace.push_back(assign_all());
  int budget = max_iterations;
  for (;;) {
    for (; budget > 0; --budget) {
      ++out.iterations;
      std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_clusters));
      for (std::size_t i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(out.assignment[i])].push_back(i);
      }
      bool changed = false;
      std::vector<int> next = out.medoids;
      parallel_for(static_cast<std::size_t>(num_clusters), threads, [&](std::size_t c) {
        const auto& m = members[c];
        if (m.empty()) return;  // empty cluster keeps its medoid
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a : m) {
          double total = 0.0;
          for (std::size_t b : m) total += dist(a, b);
          // Prefer the current medoid on ties so the loop reaches a fixed point.
          if (total < best - 1e-12 ||
              (std::fabs(total - best) <= 1e-12 &&
               static_cast<int>(a) == out.medoids[c])) {
            best = total;
            next[c] = static_cast<int>(a);
          }
        }
      });
      for (int c = 0; c < num_clusters; ++c) {
        changed = changed || next[static_cast<std::size_t>(c)] != out.medoids[static_cast<std::size_t>(c)];
      }
      if (!changed) break;
      out.medoids = std::move(next);
      out.cost_trace.push_back(assign_all());
    }
    if (!swap) break;
    if (!clustering_detail::best_swap(n, num_clusters, dist, out.medoids, threads)) break;
    out.cost_trace.push_back(assign_all());
  }
  // Duplicate medoid contents can only arise from duplicate input sets; swap
  // each repeat for the set farthest from the medoids kept so far.
  for (std::size_t c = 1; c < out.medoids.size(); ++c) {
    bool dup = false;
    for (std::size_t p = 0; p < c && !dup; ++p) {
      dup = sorted[static_cast<std::size_t>(out.medoids[p])] ==
            sorted[static_cast<std::size_t>(out.medoids[c])];
    }
    if (!dup) continue;
    double far = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double near = std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < out.medoids.size(); ++p) {
        if (p == c) continue;
        near = std::min(near, dist(i, static_cast<std::size_t>(out.medoids[p])));
      }
      if (near > far) {
        far = near;
        out.medoids[c] = static_cast<int>(i);
      }
    }
  }
  return out;
}

}  // namespace ihlab
