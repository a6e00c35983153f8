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

// Challengers for the dataset and single-instance distinguishing games, the
// encoded-accuracy estimator, and Wilson intervals for every estimate.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "ihlab/core/mt19937.hpp"
#include "ihlab/core/parallel.hpp"
#include "ihlab/core/types.hpp"
#include "ihlab/theory/problem.hpp"

namespace ihlab::theory {

inline constexpr double kWilsonZ = 1.959963984540054;
inline constexpr int kDefaultTrials = 2000;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double half_width() const { return 0.5 * (hi - lo); }
  bool contains(double v) const { return lo <= v && v <= hi; }
};

inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                double z = kWilsonZ) {
  IHLAB_REQUIRE(trials > 0, "wilson interval needs trials > 0");
  IHLAB_REQUIRE(successes <= trials, "successes exceed trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct Proportion {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;

  double value() const {
    IHLAB_REQUIRE(trials > 0, "empty proportion");
    return static_cast<double>(successes) / static_cast<double>(trials);
  }
  Interval interval() const { return wilson_interval(successes, trials); }
};

// wins / trials - 1/2, with the Wilson interval shifted by the same 1/2.
struct AdvantageEstimate {
  std::uint64_t wins = 0;
  std::uint64_t trials = 0;

  double success() const { return Proportion{wins, trials}.value(); }
  double advantage() const { return success() - 0.5; }
  Interval interval() const {
    const auto w = wilson_interval(wins, trials);
    return {w.lo - 0.5, w.hi - 0.5};
  }
  // Pr[guess 1 | b = 1] - Pr[guess 1 | b = 0] for a balanced bit.
  double gap() const { return 2.0 * advantage(); }
  Interval gap_interval() const {
    const auto a = interval();
    return {2.0 * a.lo, 2.0 * a.hi};
  }
};

namespace games_detail {

inline std::uint32_t trial_seed(std::uint64_t master, std::uint64_t stream,
                                std::uint64_t trial) {
  return derive_seed(derive_seed(master, stream), trial);
}

}  // namespace games_detail

// Per-trial record kept when a caller wants to audit a challenger.
struct GameLog {
  std::vector<std::uint8_t> bits;
  std::vector<std::uint8_t> guesses;
};

// Dataset game. The adversary fixes c and x0, x1, ..., xn with
// c(x0) = c(x1); the challenger encodes {x_b} u {x2..xn} (in random order,
// it is a set) and the adversary guesses b.
struct DatasetChallenge {
  Concept target;
  std::vector<Vec> instances;  // [0] and [1] are the candidates
};

struct EncodedSet {
  std::vector<Vec> encodings;
  std::vector<int> labels;
};

struct DatasetAdversary {
  std::function<DatasetChallenge(MtState&)> choose;
  std::function<int(const DatasetChallenge&, const EncodedSet&, MtState&)> guess;
};

inline AdvantageEstimate play_dataset_game(const LearningProblem& problem,
                                           const DatasetAdversary& adversary,
                                           const LocalEncoder& encoder, int trials,
                                           std::uint64_t seed, int threads = 0,
                                           GameLog* log = nullptr) {
  IHLAB_REQUIRE(trials > 0, "trials must be positive");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(trials));
  std::vector<std::uint8_t> guesses(static_cast<std::size_t>(trials));
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    MtState adv_rng(games_detail::trial_seed(seed, 0, t));
    MtState ch_rng(games_detail::trial_seed(seed, 1, t));
    const auto ch = adversary.choose(adv_rng);
    IHLAB_REQUIRE(ch.instances.size() >= 2, "challenge needs at least two instances");
    if (problem.label(ch.target, ch.instances[0]) !=
        problem.label(ch.target, ch.instances[1])) {
      throw InvalidArgument("challenge instances must share a label");
    }
    const int b = static_cast<int>(ch_rng.next_u32() >> 31);
    std::vector<const Vec*> members{&ch.instances[static_cast<std::size_t>(b)]};
    for (std::size_t i = 2; i < ch.instances.size(); ++i) members.push_back(&ch.instances[i]);
    const auto order = ch_rng.shuffle(static_cast<int>(members.size()));
    EncodedSet set;
    for (int i : order) {
      const Vec& x = *members[static_cast<std::size_t>(i)];
      set.encodings.push_back(encoder.encode(x, ch_rng));
      set.labels.push_back(problem.label(ch.target, x));
    }
    const int g = adversary.guess(ch, set, adv_rng);
    bits[t] = static_cast<std::uint8_t>(b);
    guesses[t] = static_cast<std::uint8_t>(g != 0);
  });
  AdvantageEstimate est;
  est.trials = static_cast<std::uint64_t>(trials);
  for (std::size_t t = 0; t < bits.size(); ++t) est.wins += bits[t] == guesses[t];
  if (log) {
    log->bits = std::move(bits);
    log->guesses = std::move(guesses);
  }
  return est;
}

// Single-encoding game. The adversary fixes c and x0, x1 with
// c(x0) = c(x1); the challenger draws x2..xn from D and a bit b, and hands
// over E(x_b, x2, ..., xn).
struct InstanceChallenge {
  Concept target;
  Vec x0;
  Vec x1;
};

struct InstanceAdversary {
  std::function<InstanceChallenge(MtState&)> choose;
  std::function<int(const InstanceChallenge&, const Vec&, MtState&)> guess;
};

// For a 1-local encoder the co-sampled instances never reach the output, so
// they are drawn only when the encoder's locality could use them.
inline Vec challenge_encoding(const LearningProblem& problem, const LocalEncoder& encoder,
                              const Vec& x, int n, MtState& rng) {
  if (encoder.locality() > 1) {
    for (int i = 1; i < std::min(n, encoder.locality()); ++i) problem.sample(rng);
  }
  return encoder.encode(x, rng);
}

inline AdvantageEstimate play_instance_game(const LearningProblem& problem,
                                            const InstanceAdversary& adversary,
                                            const LocalEncoder& encoder, int n,
                                            int trials, std::uint64_t seed,
                                            int threads = 0, GameLog* log = nullptr) {
  IHLAB_REQUIRE(n >= 1, "n must be positive");
  IHLAB_REQUIRE(trials > 0, "trials must be positive");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(trials));
  std::vector<std::uint8_t> guesses(static_cast<std::size_t>(trials));
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    MtState adv_rng(games_detail::trial_seed(seed, 0, t));
    MtState ch_rng(games_detail::trial_seed(seed, 1, t));
    const auto ch = adversary.choose(adv_rng);
    if (problem.label(ch.target, ch.x0) != problem.label(ch.target, ch.x1)) {
      throw InvalidArgument("challenge instances must share a label");
    }
    const int b = static_cast<int>(ch_rng.next_u32() >> 31);
    const Vec enc = challenge_encoding(problem, encoder, b == 0 ? ch.x0 : ch.x1, n, ch_rng);
    bits[t] = static_cast<std::uint8_t>(b);
    guesses[t] = static_cast<std::uint8_t>(adversary.guess(ch, enc, adv_rng) != 0);
  });
  AdvantageEstimate est;
  est.trials = static_cast<std::uint64_t>(trials);
  for (std::size_t t = 0; t < bits.size(); ++t) est.wins += bits[t] == guesses[t];
  if (log) {
    log->bits = std::move(bits);
    log->guesses = std::move(guesses);
  }
  return est;
}

// (x0, x1) drawn jointly from D conditioned on c(x0) = c(x1).
inline std::pair<Vec, Vec> same_label_pair(const LearningProblem& p, Concept c,
                                           MtState& rng) {
  Vec x0 = p.sample(rng);
  const int y = p.label(c, x0);
  Vec x1 = p.sample_where(rng, [&](const Vec& x) { return p.label(c, x) == y; });
  return {std::move(x0), std::move(x1)};
}

inline InstanceAdversary random_guess_instance_adversary(const LearningProblem& p,
                                                         Concept c = {}) {
  return {[&p, c](MtState& rng) {
            auto [x0, x1] = same_label_pair(p, c, rng);
            return InstanceChallenge{c, std::move(x0), std::move(x1)};
          },
          [](const InstanceChallenge&, const Vec&, MtState& rng) {
            return static_cast<int>(rng.next_u32() >> 31);
          }};
}

namespace games_detail {

inline double sq_dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline int closer(double d0, double d1, MtState& rng) {
  if (d0 < d1) return 0;
  if (d1 < d0) return 1;
  return static_cast<int>(rng.next_u32() >> 31);
}

}  // namespace games_detail

// Compares the encoding with the clean encodings of x0 and x1.
inline InstanceAdversary nearest_instance_adversary(const LearningProblem& p,
                                                    const LocalEncoder& enc,
                                                    Concept c = {}) {
  return {[&p, c](MtState& rng) {
            auto [x0, x1] = same_label_pair(p, c, rng);
            return InstanceChallenge{c, std::move(x0), std::move(x1)};
          },
          [enc](const InstanceChallenge& ch, const Vec& e, MtState& rng) {
            return games_detail::closer(games_detail::sq_dist(e, enc.clean(ch.x0)),
                                        games_detail::sq_dist(e, enc.clean(ch.x1)), rng);
          }};
}

inline DatasetAdversary random_guess_dataset_adversary(const LearningProblem& p, int n,
                                                       Concept c = {}) {
  IHLAB_REQUIRE(n >= 1, "n must be positive");
  return {[&p, n, c](MtState& rng) {
            auto [x0, x1] = same_label_pair(p, c, rng);
            DatasetChallenge ch{c, {std::move(x0), std::move(x1)}};
            for (int i = 1; i < n; ++i) ch.instances.push_back(p.sample(rng));
            return ch;
          },
          [](const DatasetChallenge&, const EncodedSet&, MtState& rng) {
            return static_cast<int>(rng.next_u32() >> 31);
          }};
}

// Looks for whichever candidate's clean encoding sits closest to some member
// of the encoded set.
inline DatasetAdversary differing_element_adversary(const LearningProblem& p,
                                                    const LocalEncoder& enc, int n,
                                                    Concept c = {}) {
  IHLAB_REQUIRE(n >= 1, "n must be positive");
  return {[&p, n, c](MtState& rng) {
            auto [x0, x1] = same_label_pair(p, c, rng);
            DatasetChallenge ch{c, {std::move(x0), std::move(x1)}};
            for (int i = 1; i < n; ++i) ch.instances.push_back(p.sample(rng));
            return ch;
          },
          [enc](const DatasetChallenge& ch, const EncodedSet& set, MtState& rng) {
            const Vec c0 = enc.clean(ch.instances[0]);
            const Vec c1 = enc.clean(ch.instances[1]);
            double d0 = std::numeric_limits<double>::infinity(), d1 = d0;
            for (const auto& e : set.encodings) {
              d0 = std::min(d0, games_detail::sq_dist(e, c0));
              d1 = std::min(d1, games_detail::sq_dist(e, c1));
            }
            return games_detail::closer(d0, d1, rng);
          }};
}

// Encoded error of h on one fresh point per call; the point's label is
// forced to `label` when it is 0 or 1.
inline bool encoded_miss(const LearningProblem& p, Concept c, const LocalEncoder& enc,
                         const Hypothesis& h, int n, int label, MtState& rng) {
  const Vec x = label < 0 ? p.sample(rng)
                          : p.sample_where(rng, [&](const Vec& v) { return p.label(c, v) == label; });
  return h.predict(challenge_encoding(p, enc, x, n, rng)) != p.label(c, x);
}

// Error of h on encodings; the balanced form is the worse of the two
// per-label errors.
inline double measure_encoded_error(const LearningProblem& p, Concept c,
                                    const LocalEncoder& enc, const Hypothesis& h, int n,
                                    int points, bool balanced, MtState& rng) {
  IHLAB_REQUIRE(points > 0, "points must be positive");
  if (!balanced) {
    int miss = 0;
    for (int i = 0; i < points; ++i) miss += encoded_miss(p, c, enc, h, n, -1, rng);
    return static_cast<double>(miss) / points;
  }
  double worst = 0.0;
  for (int y = 0; y <= 1; ++y) {
    int miss = 0;
    for (int i = 0; i < points; ++i) miss += encoded_miss(p, c, enc, h, n, y, rng);
    worst = std::max(worst, static_cast<double>(miss) / points);
  }
  return worst;
}

struct AccuracyConfig {
  int n = 100;
  int trials = 200;
  int test_points = 1000;
  bool balanced = false;
  double epsilon = 0.1;  // threshold for the failure rate
  LearnerConfig learner;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct EncodedAccuracy {
  double epsilon_hat = 0.0;          // mean per-trial encoded error
  double delta_hat = 0.0;            // fraction of trials with error >= epsilon
  double epsilon = 0.0;
  std::vector<double> trial_errors;
};

// Train on n encoded samples, then measure the encoded error on fresh
// points; repeated over independent trials.
inline EncodedAccuracy encoded_accuracy(const LearningProblem& p, Concept c,
                                        const LocalEncoder& enc, const AccuracyConfig& cfg) {
  IHLAB_REQUIRE(cfg.n >= 1, "n must be positive");
  IHLAB_REQUIRE(cfg.trials > 0 && cfg.test_points > 0, "trials and test points must be positive");
  EncodedAccuracy out;
  out.epsilon = cfg.epsilon;
  out.trial_errors.resize(static_cast<std::size_t>(cfg.trials));
  const auto source = concept_source(p, c);
  parallel_for(static_cast<std::size_t>(cfg.trials), cfg.threads, [&](std::size_t t) {
    MtState rng(games_detail::trial_seed(cfg.seed, 2, t));
    const auto h = train_on_encodings(source, enc, cfg.n, cfg.learner, rng);
    out.trial_errors[t] =
        measure_encoded_error(p, c, enc, h, cfg.n, cfg.test_points, cfg.balanced, rng);
  });
  int failures = 0;
  for (double e : out.trial_errors) {
    out.epsilon_hat += e;
    failures += e >= cfg.epsilon;
  }
  out.epsilon_hat /= cfg.trials;
  out.delta_hat = static_cast<double>(failures) / cfg.trials;
  return out;
}

}  // namespace ihlab::theory
