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

// Constructive adversaries: the hybrid distinguisher over datasets, the
// rich-class attack that trains one classifier per concept, and the
// boost-or-attack dichotomy for a single concept.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ihlab/core/mt19937.hpp"
#include "ihlab/core/parallel.hpp"
#include "ihlab/core/types.hpp"
#include "ihlab/theory/games.hpp"
#include "ihlab/theory/problem.hpp"

namespace ihlab::theory {

// ---------------------------------------------------------------- richness

struct RichnessConfig {
  double gamma = 0.25;
  int trials = 2000;
  int random_patterns = 64;
  std::uint64_t seed = 1;
};

struct RichnessReport {
  double min_probability = 1.0;  // over the evaluated patterns
  std::size_t worst_pattern = 0;
  std::size_t patterns = 0;
  bool pass = false;
};

// Pr_x[|F(x) - f| / m >= gamma] for the all-zeros and all-ones patterns plus
// `random_patterns` uniform ones; passes iff every estimate is >= 0.99.
inline RichnessReport richness_check(const LearningProblem& p, const std::vector<Concept>& F,
                                     const RichnessConfig& cfg) {
  IHLAB_REQUIRE(!F.empty(), "F is empty");
  IHLAB_REQUIRE(cfg.trials > 0, "trials must be positive");
  IHLAB_REQUIRE(cfg.gamma >= 0.0, "gamma must be nonnegative");
  const std::size_t m = F.size();
  MtState rng(derive_seed(cfg.seed, 3));
  std::vector<std::vector<std::uint8_t>> bits(static_cast<std::size_t>(cfg.trials));
  for (auto& row : bits) {
    const Vec x = p.sample(rng);
    row.resize(m);
    for (std::size_t i = 0; i < m; ++i) row[i] = static_cast<std::uint8_t>(p.label(F[i], x));
  }
  std::vector<std::vector<std::uint8_t>> patterns{std::vector<std::uint8_t>(m, 0),
                                                  std::vector<std::uint8_t>(m, 1)};
  for (int r = 0; r < cfg.random_patterns; ++r) {
    std::vector<std::uint8_t> f(m);
    for (auto& v : f) v = static_cast<std::uint8_t>(rng.next_u32() >> 31);
    patterns.push_back(std::move(f));
  }
  RichnessReport out;
  out.patterns = patterns.size();
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    int far = 0;
    for (const auto& row : bits) {
      std::size_t ham = 0;
      for (std::size_t i = 0; i < m; ++i) ham += row[i] != patterns[k][i];
      far += static_cast<double>(ham) / static_cast<double>(m) >= cfg.gamma;
    }
    const double prob = static_cast<double>(far) / cfg.trials;
    if (prob < out.min_probability) {
      out.min_probability = prob;
      out.worst_pattern = k;
    }
  }
  out.pass = out.min_probability >= 0.99;
  return out;
}

inline std::vector<Concept> first_concepts(int m) {
  std::vector<Concept> F;
  for (int i = 0; i < m; ++i) F.push_back({i, false});
  return F;
}

// --------------------------------------------------------- hybrid argument

struct HybridConfig {
  int n = 16;
  int trials = kDefaultTrials;
  int test_size = 1000;
  Concept c1{0, false};
  Concept c2{1, false};
  LearnerConfig learner;
  std::uint64_t budget = kRejectionBudget;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct StepGap {
  int from = 0;  // T_from vs T_{from+1}
  double gap = 0.0;
  double slack = 0.0;  // sum of both Wilson half-widths
};

struct HybridReport {
  Proportion q_c1;       // Pr[q(E(D_c1^n)) = 1]
  Proportion q_not_c1;   // Pr[q(E(D_{1-c1}^n)) = 1]
  Proportion q_a;
  Proportion q_b;
  std::vector<Proportion> hybrids;  // T_0 = D_c1 ... T_n = D_a
  std::vector<StepGap> steps;
  double delta_hat = 0.0;           // trials whose test agreement fell below 0.51

  double endpoint() const { return std::fabs(q_c1.value() - q_not_c1.value()); }
  double endpoint_slack() const {
    return q_c1.interval().half_width() + q_not_c1.interval().half_width();
  }
  double endpoint_bound() const { return 0.99 - 2.0 * delta_hat; }
  double adv_c1() const { return std::fabs(q_a.value() - q_c1.value()); }
  double adv_c2() const { return std::fabs(q_a.value() - q_b.value()); }
  double adv_not_c1() const { return std::fabs(q_b.value() - q_not_c1.value()); }
  const StepGap& max_step() const {
    return *std::max_element(steps.begin(), steps.end(), [](const StepGap& a, const StepGap& b) {
      return a.gap < b.gap;
    });
  }
  // The distinguishers along D_c1 -> T_1 .. T_n = D_a -> D_b -> D_{1-c1}
  // must add up to at least the endpoint gap.
  double chain_total() const {
    double s = adv_c2() + adv_not_c1();
    for (const auto& st : steps) s += st.gap;
    return s;
  }
  bool telescopes(double slack = 0.0) const { return chain_total() >= endpoint() - slack; }
};

namespace theory_detail {

// D_a: label y uniform, x from D given c1(x) = c2(x) = y.
// D_b: label y uniform, x from D given c2(x) = y and c1(x) = 1 - y.
inline LabeledSample draw_conditional(const LearningProblem& p, Concept c1, Concept c2,
                                      bool agree, std::uint64_t budget, MtState& rng) {
  const int y = static_cast<int>(rng.next_u32() >> 31);
  Vec x = p.sample_where(rng, [&](const Vec& v) {
    return p.label(c2, v) == y && p.label(c1, v) == (agree ? y : 1 - y);
  }, budget);
  return {std::move(x), y};
}

}  // namespace theory_detail

// The distinguisher q: train on the encoded dataset, query the model on
// test_size fresh encoded points from D_c1, output 1 iff the predictions
// agree with c1 on a strict majority.
inline HybridReport run_hybrid_adversary(const LearningProblem& p, const LocalEncoder& enc,
                                             const HybridConfig& cfg) {
  IHLAB_REQUIRE(cfg.n >= 1 && cfg.trials > 0 && cfg.test_size > 0, "bad hybrid config");
  IHLAB_REQUIRE(cfg.c1.index != cfg.c2.index, "c1 and c2 must be distinct concepts");
  const int n = cfg.n;

  // mix = fraction drawn from D_a; the rest comes from `base`.
  enum class Base { kC1, kNotC1, kB };
  struct Dist {
    Base base;
    double mix;
  };
  int low_agreement = 0, endpoint_trials = 0;
  auto estimate = [&](Dist dist, std::uint64_t stream, bool endpoint) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(cfg.trials));
    std::vector<std::uint8_t> low(static_cast<std::size_t>(cfg.trials));
    parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
      MtState rng(games_detail::trial_seed(cfg.seed, 100 + stream, t));
      const LabeledSource source = [&](MtState& r) -> LabeledSample {
        const bool from_a = dist.mix > 0.0 && r.next_f64() < dist.mix;
        if (from_a) return theory_detail::draw_conditional(p, cfg.c1, cfg.c2, true, cfg.budget, r);
        switch (dist.base) {
          case Base::kC1: return concept_source(p, cfg.c1)(r);
          case Base::kNotC1: return concept_source(p, cfg.c1.complement())(r);
          case Base::kB:
            return theory_detail::draw_conditional(p, cfg.c1, cfg.c2, false, cfg.budget, r);
        }
        return {};
      };
      const auto h = train_on_encodings(source, enc, n, cfg.learner, rng);
      int agree = 0;
      for (int i = 0; i < cfg.test_size; ++i) {
        const Vec x = p.sample(rng);
        agree += h.predict(challenge_encoding(p, enc, x, n, rng)) == p.label(cfg.c1, x);
      }
      out[t] = 2 * agree > cfg.test_size;
      // Accuracy w.r.t. the concept that labeled the training data.
      const int correct = dist.base == Base::kNotC1 ? cfg.test_size - agree : agree;
      low[t] = correct < 0.51 * cfg.test_size;
    });
    Proportion pr{0, static_cast<std::uint64_t>(cfg.trials)};
    for (auto v : out) pr.successes += v;
    if (endpoint) {
      for (auto v : low) low_agreement += v;
      endpoint_trials += cfg.trials;
    }
    return pr;
  };

  HybridReport r;
  r.q_c1 = estimate({Base::kC1, 0.0}, 0, true);
  r.q_not_c1 = estimate({Base::kNotC1, 0.0}, 1, true);
  r.q_a = estimate({Base::kC1, 1.0}, 2, false);
  r.q_b = estimate({Base::kB, 0.0}, 3, false);
  r.delta_hat = static_cast<double>(low_agreement) / endpoint_trials;
  r.hybrids.push_back(r.q_c1);
  for (int i = 1; i < n; ++i) {
    r.hybrids.push_back(estimate({Base::kC1, static_cast<double>(i) / n},
                                 4 + static_cast<std::uint64_t>(i), false));
  }
  r.hybrids.push_back(r.q_a);
  for (int i = 0; i < n; ++i) {
    const auto& a = r.hybrids[static_cast<std::size_t>(i)];
    const auto& b = r.hybrids[static_cast<std::size_t>(i) + 1];
    r.steps.push_back({i, std::fabs(a.value() - b.value()),
                       a.interval().half_width() + b.interval().half_width()});
  }
  return r;
}

// -------------------------------------------------------- rich-class attack

struct RichClassConfig {
  int n = 200;
  int m = 32;
  double gamma = 0.25;
  int trials = kDefaultTrials;
  Concept target{0, false};
  std::optional<double> target_error = 0.2;  // per concept; nullopt accepts any model
  int max_attempts = 20;
  int accuracy_points = 2000;
  RichnessConfig richness;
  LearnerConfig learner;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct RichClassReport {
  RichnessReport richness;
  std::vector<double> concept_errors;
  int attempts = 0;
  AdvantageEstimate estimate;

  double epsilon_hat() const {
    double s = 0.0;
    for (double e : concept_errors) s += e;
    return s / static_cast<double>(concept_errors.size());
  }
  double gamma = 0.25;
  double bound() const { return 0.99 - epsilon_hat() / gamma; }
};

// Trains G = (h_1..h_m), retraining each until its encoded error meets the
// target, then plays the single-encoding game: output 1 iff
// |F(x0) - G(x~)| / m >= gamma.
inline RichClassReport run_rich_class_adversary(const LearningProblem& p, const LocalEncoder& enc,
                                             const RichClassConfig& cfg) {
  IHLAB_REQUIRE(cfg.m >= 1 && cfg.m <= p.num_concepts(), "m = ", cfg.m, " but the problem has ",
                p.num_concepts(), " concepts");
  IHLAB_REQUIRE(cfg.n >= 1 && cfg.trials > 0 && cfg.max_attempts >= 1, "bad rich-class config");
  RichClassReport r;
  r.gamma = cfg.gamma;
  const auto F = first_concepts(cfg.m);
  RichnessConfig rc = cfg.richness;
  rc.gamma = cfg.gamma;
  r.richness = richness_check(p, F, rc);
  if (!r.richness.pass) {
    throw InvalidArgument(detail::concat("concept class is not (", cfg.m, ", ", cfg.gamma,
                                         ")-rich: min probability ", r.richness.min_probability));
  }

  std::vector<Hypothesis> G(F.size());
  r.concept_errors.resize(F.size());
  std::vector<int> attempts(F.size(), 0);
  parallel_for(F.size(), cfg.threads, [&](std::size_t i) {
    MtState rng(games_detail::trial_seed(cfg.seed, 200, i));
    const auto source = concept_source(p, F[i]);
    for (int a = 0; a < cfg.max_attempts; ++a) {
      attempts[i] = a + 1;
      G[i] = train_on_encodings(source, enc, cfg.n, cfg.learner, rng);
      r.concept_errors[i] =
          measure_encoded_error(p, F[i], enc, G[i], cfg.n, cfg.accuracy_points, false, rng);
      if (!cfg.target_error || r.concept_errors[i] <= *cfg.target_error) return;
    }
    throw Error(detail::concat("training budget exhausted: concept ", i, " stayed at encoded error ",
                               r.concept_errors[i], " after ", cfg.max_attempts, " attempts"));
  });
  for (int a : attempts) r.attempts += a;

  const std::size_t m = F.size();
  const double gamma = cfg.gamma;
  InstanceAdversary adv{
      [&](MtState& rng) {
        auto [x0, x1] = same_label_pair(p, cfg.target, rng);
        return InstanceChallenge{cfg.target, std::move(x0), std::move(x1)};
      },
      [&](const InstanceChallenge& ch, const Vec& e, MtState&) {
        std::size_t ham = 0;
        for (std::size_t i = 0; i < m; ++i) ham += p.label(F[i], ch.x0) != G[i].predict(e);
        return static_cast<double>(ham) / static_cast<double>(m) >= gamma ? 1 : 0;
      }};
  r.estimate = play_instance_game(p, adv, enc, cfg.n, cfg.trials,
                                  derive_seed(cfg.seed, 201), cfg.threads);
  return r;
}

// -------------------------------------------------------------- dichotomy

struct DichotomyConfig {
  int m = 50;                     // training samples per model
  double tau = 0.1;
  int trials = kDefaultTrials;    // game plays once a pair is found
  Concept target{0, false};
  std::optional<double> target_error;  // balanced; nullopt accepts the first model
  int max_attempts = 50;
  int accuracy_points = 2000;
  int boost_points = 500;
  int candidate_budget = 5000;
  LearnerConfig learner;
  std::uint64_t seed = 1;
  int threads = 0;
};

inline int booster_votes(double tau) {
  IHLAB_REQUIRE(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
  return static_cast<int>(std::ceil(20.0 * std::log(1.0 / tau) / (tau * tau)));
}

inline int event_draws(double tau) {
  IHLAB_REQUIRE(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
  return static_cast<int>(std::ceil(8.0 / (tau * tau)));
}

struct DichotomyReport {
  double tau = 0.1;
  double epsilon_hat = 0.0;  // balanced encoded error of the chosen model
  int model_attempts = 0;
  int votes = 0;             // k
  int draws_per_event = 0;
  Proportion boosted;        // h'(x) = c(x)
  int candidates_tried = 0;
  std::optional<AdvantageEstimate> attack;

  double accuracy_bound() const { return 1.0 - tau; }
  double attack_bound() const { return 0.5 - epsilon_hat - tau; }
  bool high_accuracy() const { return boosted.value() >= accuracy_bound(); }
  std::string arm() const { return attack ? "attack" : "boosted-accuracy"; }
};

inline DichotomyReport run_dichotomy(const LearningProblem& p, const LocalEncoder& enc,
                                             const DichotomyConfig& cfg) {
  IHLAB_REQUIRE(cfg.m >= 1 && cfg.trials > 0 && cfg.boost_points > 0 && cfg.candidate_budget > 0,
                "bad dichotomy config");
  DichotomyReport r;
  r.tau = cfg.tau;
  r.votes = booster_votes(cfg.tau);
  r.draws_per_event = event_draws(cfg.tau);
  const Concept c = cfg.target;

  // 1. Train until the balanced encoded error meets the target.
  MtState rng(derive_seed(cfg.seed, 300));
  const auto source = concept_source(p, c);
  Hypothesis h;
  for (int a = 0;; ++a) {
    if (a == cfg.max_attempts) {
      throw Error(detail::concat("training budget exhausted: balanced encoded error ",
                                 r.epsilon_hat, " after ", cfg.max_attempts, " attempts"));
    }
    r.model_attempts = a + 1;
    h = train_on_encodings(source, enc, cfg.m, cfg.learner, rng);
    r.epsilon_hat = measure_encoded_error(p, c, enc, h, cfg.m, cfg.accuracy_points, true, rng);
    if (!cfg.target_error || r.epsilon_hat <= *cfg.target_error) break;
  }

  // 2. Booster: majority over k fresh encodings.
  std::vector<std::uint8_t> right(static_cast<std::size_t>(cfg.boost_points));
  parallel_for(right.size(), cfg.threads, [&](std::size_t t) {
    MtState r2(games_detail::trial_seed(cfg.seed, 301, t));
    const Vec x = p.sample(r2);
    int ones = 0;
    for (int v = 0; v < r.votes; ++v) ones += h.predict(challenge_encoding(p, enc, x, cfg.m, r2));
    const int vote = 2 * ones > r.votes ? 1 : 0;
    right[t] = vote == p.label(c, x);
  });
  r.boosted.trials = right.size();
  for (auto v : right) r.boosted.successes += v;

  // 3. Pair search with empirical Z and W events.
  auto rate_correct = [&](const Vec& x, MtState& r2) {
    int ok = 0;
    for (int v = 0; v < r.draws_per_event; ++v) {
      ok += h.predict(challenge_encoding(p, enc, x, cfg.m, r2)) == p.label(c, x);
    }
    return static_cast<double>(ok) / r.draws_per_event;
  };
  MtState search(derive_seed(cfg.seed, 302));
  std::optional<std::pair<Vec, Vec>> pair;
  for (int t = 0; t < cfg.candidate_budget && !pair; ++t) {
    r.candidates_tried = t + 1;
    auto [x0, x1] = same_label_pair(p, c, search);
    if (1.0 - rate_correct(x0, search) < 0.5 - cfg.tau / 2.0) continue;
    if (rate_correct(x1, search) < 1.0 - r.epsilon_hat - cfg.tau / 2.0) continue;
    pair.emplace(std::move(x0), std::move(x1));
  }

  // 4. Output 1 iff h(u) = c(x0).
  if (pair) {
    const auto& [x0, x1] = *pair;
    const int y0 = p.label(c, x0);
    InstanceAdversary adv{
        [&](MtState&) { return InstanceChallenge{c, x0, x1}; },
        [&](const InstanceChallenge&, const Vec& u, MtState&) {
          return h.predict(u) == y0 ? 1 : 0;
        }};
    r.attack = play_instance_game(p, adv, enc, cfg.m, cfg.trials, derive_seed(cfg.seed, 303),
                                  cfg.threads);
  }
  return r;
}

// ------------------------------------------------------------------ report

struct ReportRow {
  std::string experiment;
  std::string encoder;
  std::string params;
  double epsilon_hat = 0.0;
  double delta_hat = 0.0;
  double advantage = 0.0;
  Interval ci;
  double bound = 0.0;
  bool pass = false;
};

inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "experiment,encoder,params,epsilon_hat,delta_hat,advantage,ci_lo,ci_hi,bound,pass\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.encoder << ",\"" << r.params << "\"," << r.epsilon_hat << ','
        << r.delta_hat << ',' << r.advantage << ',' << r.ci.lo << ',' << r.ci.hi << ','
        << r.bound << ',' << (r.pass ? "pass" : "fail") << '\n';
  }
}

}  // namespace ihlab::theory
