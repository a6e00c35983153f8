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

// End-to-end attack on an encoded dataset: similarity graph, clique growth,
// set clustering, flow assignment, lambda pairing, then recovery. Only the
// encodings and the public parameters (|X|, N, k, sign_flip) are used; the
// ground-truth sidecar is consulted solely by evaluate_attack.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ihlab/assignment.hpp"
#include "ihlab/clustering.hpp"
#include "ihlab/flow.hpp"
#include "ihlab/metrics.hpp"
#include "ihlab/recovery.hpp"
#include "ihlab/similarity.hpp"

namespace ihlab {

struct AttackOptions {
  int clique_growth = 0;  // 0 picks floor(N/4)
  int reps_per_set = 4;
  bool baseline_only = false;
  bool l1 = false;
  // Extra unknown for the mean public image, weighted 1 - lambda_1 - lambda_2.
  bool noise_column = true;
  // Order lambdas by class when both sets' classes match the label.
  bool class_pairing = true;
  // Re-assign from residuals against the current reconstruction, then
  // re-solve. 0 runs the single-pass pipeline.
  int refine_rounds = 2;
  Box box;
  std::uint32_t seed = 1;  // representative sampling
  int threads = 0;
  AbsGdOptions gd;
  LeastSquaresOptions ls;
};

struct AttackResult {
  std::vector<CliqueSet> cliques;         // one grown set per encoding
  SetClustering clustering;
  std::vector<CliqueSet> sources;         // chosen set per private image
  std::vector<std::vector<int>> representatives;
  SetSimilarityGraph set_similarity;
  AssignmentMap assignment;
  std::vector<std::vector<int>> members;  // encodings assigned to each set
  std::vector<Image> baseline;
  ReconstructionResult reconstruction;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage

  const std::vector<Image>& images() const { return reconstruction.images; }
};

// Majority label class of each set's assigned encodings.
inline std::vector<int> infer_set_classes(const EncodedDataset& ds,
                                          const std::vector<std::vector<int>>& members) {
  std::vector<int> out;
  for (const auto& m : members) out.push_back(majority_class(ds, m));
  return out;
}

// Lambdas for every encoding, ordered to its two assigned sets. When the two
// set classes are the label's two classes, the lambda of each class goes to
// the set of that class; otherwise the residual test decides.
inline void pair_all_lambdas(const EncodedDataset& ds, AssignmentMap& map,
                             const SetSimilarityGraph& set_sim,
                             const std::vector<Image>& abs_means,
                             const std::vector<int>& set_classes, bool by_class) {
  for (std::size_t e = 0; e < ds.size(); ++e) {
    const auto lam = recover_lambdas(ds.encodings[e].label);
    const auto sets = map.sets[e];
    if (by_class && !lam.same_class) {
      const int ca = set_classes[static_cast<std::size_t>(sets[0])];
      const int cb = set_classes[static_cast<std::size_t>(sets[1])];
      if (ca == lam.classes[0] && cb == lam.classes[1]) {
        map.lambdas[e] = lam.lambdas;
        continue;
      }
      if (ca == lam.classes[1] && cb == lam.classes[0]) {
        map.lambdas[e] = {lam.lambdas[1], lam.lambdas[0]};
        continue;
      }
    }
    map.lambdas[e] = pair_lambdas(
        ds.encodings[e].pixels, sets, lam.lambdas, abs_means,
        {set_sim.at(static_cast<std::size_t>(sets[0]), e),
         set_sim.at(static_cast<std::size_t>(sets[1]), e)});
  }
}

// Set-to-encoding scores from a reconstruction. For encoding e with label
// classes (c0, c1) and lambdas (l0, l1), every pair of sets (a, b) of those
// classes is scored by r(a, b) = | F(e) - l0 F(x_a) - l1 F(x_b) |_1 with F
// the edge features. The public images leave sparse edges that the L1 norm
// mostly shrugs off. Set s gets min_r / min over pairs containing s; sets of
// other classes get 0.
inline SetSimilarityGraph residual_set_similarity(const EncodedDataset& ds,
                                                  const std::vector<Image>& images,
                                                  const std::vector<int>& set_classes,
                                                  int threads = 0) {
  const std::size_t n = ds.size();
  const std::size_t sets = images.size();
  IHLAB_REQUIRE(set_classes.size() == sets, "class count mismatch");
  std::vector<std::vector<double>> feats(sets);
  parallel_for(sets, threads, [&](std::size_t s) {
    feats[s] = abs_features(images[s], FeatureKind::kEdges);
  });
  SetSimilarityGraph g(sets, n);
  parallel_for(n, threads, [&](std::size_t e) {
    const auto y = abs_features(ds.encodings[e].pixels, FeatureKind::kEdges);
    const auto lam = recover_lambdas(ds.encodings[e].label);
    auto candidates = [&](int cls) {
      std::vector<std::size_t> c;
      for (std::size_t s = 0; s < sets; ++s) {
        if (set_classes[s] == cls) c.push_back(s);
      }
      if (c.empty()) {
        for (std::size_t s = 0; s < sets; ++s) c.push_back(s);
      }
      return c;
    };
    const auto first = candidates(lam.classes[0]);
    const auto second = candidates(lam.classes[1]);
    std::vector<double> best(sets, std::numeric_limits<double>::infinity());
    double overall = std::numeric_limits<double>::infinity();
    for (std::size_t a : first) {
      for (std::size_t b : second) {
        if (a == b) continue;
        double l1 = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) {
          l1 += std::fabs(y[j] - lam.lambdas[0] * feats[a][j] - lam.lambdas[1] * feats[b][j]);
        }
        best[a] = std::min(best[a], l1);
        best[b] = std::min(best[b], l1);
        overall = std::min(overall, l1);
      }
    }
    for (std::size_t s = 0; s < sets; ++s) {
      if (!std::isfinite(best[s])) continue;
      g.at(s, e) = best[s] <= 0.0 ? 1.0f : static_cast<float>(overall / best[s]);
    }
  });
  return g;
}

inline AttackResult run_attack(const EncodedDataset& ds, const SimilarityModel& model,
                               const AttackOptions& opts = {}) {
  const auto& p = ds.params;
  IHLAB_REQUIRE(p.num_private >= 2 && p.epochs >= 1, "bad dataset parameters");
  IHLAB_REQUIRE(ds.size() == static_cast<std::size_t>(p.num_private) * p.epochs,
                "dataset has ", ds.size(), " encodings, expected N * |X| = ",
                p.num_private * p.epochs);
  AttackResult out;
  auto clock = std::chrono::steady_clock::now();
  auto lap = [&](const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    out.timings.emplace_back(stage, std::chrono::duration<double>(now - clock).count());
    clock = now;
  };

  const SimilarityGraph g = model.graph(ds, opts.threads);
  lap("similarity");

  const int growth = opts.clique_growth > 0 ? opts.clique_growth
                                            : default_clique_growth(p.epochs);
  out.cliques = create_all(g, growth, opts.threads);
  out.clustering = cluster_sets(out.cliques, p.num_private, 50, opts.threads);
  for (int m : out.clustering.medoids) {
    out.sources.push_back(out.cliques[static_cast<std::size_t>(m)]);
  }
  lap("clustering");

  out.representatives = choose_representatives(out.sources, opts.reps_per_set, opts.seed);
  out.set_similarity = model.set_graph(ds, out.representatives, opts.threads);
  out.assignment = solve_assignment(out.set_similarity, p.epochs, p.num_private,
                                    static_cast<int>(ds.size()));
  auto adopt_assignment = [&] {
    out.members.assign(static_cast<std::size_t>(p.num_private), {});
    for (std::size_t e = 0; e < ds.size(); ++e) {
      for (int s : out.assignment.sets[e]) {
        out.members[static_cast<std::size_t>(s)].push_back(static_cast<int>(e));
      }
    }
    out.baseline = abs_mean_baseline(out.members, ds, opts.box);
    pair_all_lambdas(ds, out.assignment, out.set_similarity, out.baseline,
                     infer_set_classes(ds, out.members), opts.class_pairing);
  };
  adopt_assignment();
  lap("assignment");

  if (opts.baseline_only) {
    out.reconstruction.images = out.baseline;
    out.reconstruction.method = "abs_mean";
    lap("recovery");
    return out;
  }
  SystemOptions so;
  so.take_abs = p.sign_flip;
  so.noise_column = opts.noise_column;
  so.box = opts.box;
  auto recover = [&](const std::vector<Image>& warm) {
    const MixSystem sys = build_mix_system(ds, out.assignment, p.num_private, so);
    if (p.sign_flip) {
      AbsGdOptions gd = opts.gd;
      gd.l1 = opts.l1;
      gd.threads = opts.threads;
      return solve_abs_gd(sys, warm, gd);
    }
    LeastSquaresOptions ls = opts.ls;
    ls.threads = opts.threads;
    return solve_least_squares(sys, ls);
  };
  out.reconstruction = recover(out.baseline);
  for (int round = 0; round < opts.refine_rounds; ++round) {
    out.set_similarity = residual_set_similarity(
        ds, out.reconstruction.images, infer_set_classes(ds, out.members), opts.threads);
    out.assignment = solve_assignment(out.set_similarity, p.epochs, p.num_private,
                                      static_cast<int>(ds.size()));
    adopt_assignment();
    out.reconstruction = recover(out.reconstruction.images);
  }
  lap("recovery");
  return out;
}

struct AttackEvaluation {
  double assignment_accuracy = 0.0;  // recovered pair == true pair
  std::vector<int> set_to_source;    // max-overlap matching of sets to sources
  MetricReport recovered;
  MetricReport baseline;
};

inline AttackEvaluation evaluate_attack(const AttackResult& result,
                                        const std::vector<MixRecord>& truth,
                                        const std::vector<Image>& originals) {
  const std::size_t n = originals.size();
  IHLAB_REQUIRE(result.members.size() == n, "attack recovered ", result.members.size(),
                " sets for ", n, " sources");
  IHLAB_REQUIRE(result.assignment.size() == truth.size(), "truth covers ",
                truth.size(), " of ", result.assignment.size(), " encodings");
  std::vector<std::vector<std::int64_t>> overlap(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t s = 0; s < n; ++s) {
    for (int e : result.members[s]) {
      const auto [a, b] = truth[static_cast<std::size_t>(e)].private_indices;
      ++overlap[s][static_cast<std::size_t>(a)];
      ++overlap[s][static_cast<std::size_t>(b)];
    }
  }
  std::int64_t most = 0;
  for (const auto& row : overlap) {
    for (auto v : row) most = std::max(most, v);
  }
  for (auto& row : overlap) {
    for (auto& v : row) v = most - v;
  }
  AttackEvaluation ev;
  ev.set_to_source = solve_linear_assignment(overlap);
  std::size_t hits = 0;
  for (std::size_t e = 0; e < truth.size(); ++e) {
    const auto sets = result.assignment.sets[e];
    int a = ev.set_to_source[static_cast<std::size_t>(sets[0])];
    int b = ev.set_to_source[static_cast<std::size_t>(sets[1])];
    auto [ta, tb] = truth[e].private_indices;
    if (a > b) std::swap(a, b);
    if (ta > tb) std::swap(ta, tb);
    hits += (a == ta && b == tb) ? 1 : 0;
  }
  ev.assignment_accuracy =
      truth.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
  ev.recovered = match_reconstructions(result.images(), originals);
  ev.baseline = match_reconstructions(result.baseline, originals);
  return ev;
}

}  // namespace ihlab
