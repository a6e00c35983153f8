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

// Seed recovery against the encoder's single MT19937 stream.
//
// A candidate seed is tested by replaying the draws that precede the first
// encoding's sign mask and demasking that encoding: the true mask leaves a
// mixture of nonnegative images, a wrong one flips about half the pixels
// negative. Once the seed is known every record is regenerated and the
// sources follow from an exactly determined linear system.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

#include "ihlab/core/mt19937.hpp"
#include "ihlab/core/parallel.hpp"
#include "ihlab/core/types.hpp"
#include "ihlab/encoder.hpp"
#include "ihlab/recovery.hpp"

namespace ihlab {

inline constexpr double kDemaskSlack = 1e-9;

enum class SeedVerdict { kReject, kAccept, kVacuous };

inline const char* to_string(SeedVerdict v) {
  switch (v) {
    case SeedVerdict::kAccept: return "accept";
    case SeedVerdict::kReject: return "reject";
    case SeedVerdict::kVacuous: return "sign-flip absent, seed test vacuous";
  }
  return "?";
}

// What test_seed needs from the dataset, extracted once.
struct SeedProbe {
  int num_private = 0;
  int k = 2;
  int pool = 0;
  bool sign_flip = true;
  std::vector<float> first;  // pixels of encoding 0

  static SeedProbe from(const EncodedDataset& ds) {
    IHLAB_REQUIRE(!ds.encodings.empty(), "empty dataset");
    SeedProbe p;
    p.num_private = ds.params.num_private;
    p.k = ds.params.k;
    p.pool = ds.params.public_pool_size;
    p.sign_flip = ds.params.sign_flip;
    const auto px = ds.encodings[0].pixels.pixels();
    p.first.assign(px.begin(), px.end());
    return p;
  }
};

// Replays epoch 0's permutations and the first position's lambda and public
// draws, then streams sign draws against encoding 0. Stops at the first
// pixel that demasks negative.
inline SeedVerdict test_seed(std::uint32_t candidate, const SeedProbe& probe) {
  if (!probe.sign_flip) return SeedVerdict::kVacuous;
  MtState rng(candidate);
  draw_epoch_pairing(rng, probe.num_private);
  draw_lambdas(rng, probe.k);
  draw_public_indices(rng, probe.k - 2, probe.pool);
  for (float v : probe.first) {
    const bool plus = rng.next_u32() < 0x80000000u;
    const double demasked = plus ? v : -static_cast<double>(v);
    if (demasked < -kDemaskSlack) return SeedVerdict::kReject;
  }
  return SeedVerdict::kAccept;
}

inline SeedVerdict test_seed(std::uint32_t candidate, const EncodedDataset& ds) {
  return test_seed(candidate, SeedProbe::from(ds));
}

struct RecoveredSecrets {
  std::uint32_t seed = 0;
  std::vector<MixRecord> records;
  bool verified = false;
};

// Regenerates every record from `seed` and demasks every encoding.
inline std::optional<RecoveredSecrets> verify_seed(std::uint32_t seed,
                                                   const EncodedDataset& ds) {
  const auto cfg = config_from_params(ds.params, seed);
  RecoveredSecrets s;
  s.seed = seed;
  s.records = plan_mix_records(cfg, ds.params.num_private, ds.params.shape.size());
  if (s.records.size() != ds.size()) return std::nullopt;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& px = ds.encodings[i].pixels;
    const auto& sigma = s.records[i].sigma;
    if (sigma.size() != px.size()) return std::nullopt;
    for (std::size_t j = 0; j < px.size(); ++j) {
      if (sigma[j] * static_cast<double>(px[j]) < -kDemaskSlack) return std::nullopt;
    }
  }
  s.verified = true;
  return s;
}

struct SeedSearchConfig {
  std::uint32_t seed_lo = 0;
  std::uint32_t seed_hi = (1u << 20) - 1;  // inclusive
  int threads = 0;
  bool early_stop = true;
  std::uint32_t chunk = 4096;

  std::uint64_t width() const { return std::uint64_t{seed_hi} - seed_lo + 1; }
};

struct SeedSearchResult {
  std::optional<RecoveredSecrets> secrets;
  std::uint64_t tested = 0;
  std::uint64_t fast_accepts = 0;  // passed test_seed
  std::vector<std::uint32_t> rejected_on_verify;  // fast accepts that failed verification
  bool vacuous = false;
  double seconds = 0.0;
};

inline SeedSearchResult search_seed(const EncodedDataset& ds,
                                    const SeedSearchConfig& cfg = {}) {
  IHLAB_REQUIRE(cfg.seed_lo <= cfg.seed_hi, "seed_lo ", cfg.seed_lo,
                " > seed_hi ", cfg.seed_hi);
  IHLAB_REQUIRE(cfg.chunk >= 1, "chunk must be positive");
  const auto start = std::chrono::steady_clock::now();
  const SeedProbe probe = SeedProbe::from(ds);
  SeedSearchResult out;
  if (!probe.sign_flip) {
    out.vacuous = true;
    return out;
  }
  const std::uint64_t width = cfg.width();
  const std::uint64_t chunks = (width + cfg.chunk - 1) / cfg.chunk;
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> tested{0}, accepts{0};
  std::mutex mu;
  parallel_for(static_cast<std::size_t>(chunks), cfg.threads, [&](std::size_t c) {
    if (stop.load(std::memory_order_relaxed)) return;
    const std::uint64_t begin = cfg.seed_lo + std::uint64_t{c} * cfg.chunk;
    const std::uint64_t end = std::min<std::uint64_t>(begin + cfg.chunk,
                                                      std::uint64_t{cfg.seed_hi} + 1);
    std::uint64_t local = 0;
    for (std::uint64_t s = begin; s < end; ++s) {
      if (cfg.early_stop && stop.load(std::memory_order_relaxed)) break;
      ++local;
      const auto candidate = static_cast<std::uint32_t>(s);
      if (test_seed(candidate, probe) != SeedVerdict::kAccept) continue;
      accepts.fetch_add(1);
      auto secrets = verify_seed(candidate, ds);
      std::lock_guard<std::mutex> lock(mu);
      if (!secrets) {
        out.rejected_on_verify.push_back(candidate);
        continue;
      }
      // Smallest verified seed wins, so the answer does not depend on the
      // order workers finish in.
      if (!out.secrets || candidate < out.secrets->seed) out.secrets = std::move(secrets);
      if (cfg.early_stop) stop.store(true);
    }
    tested.fetch_add(local);
  }, 1);
  out.tested = tested.load();
  out.fast_accepts = accepts.load();
  std::sort(out.rejected_on_verify.begin(), out.rejected_on_verify.end());
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

struct ExactOptions {
  // Without the pool, fit the mean public image as one extra unknown.
  bool noise_column = true;
  LeastSquaresOptions ls;
};

// Demasks with the recovered signs, removes the exact public contributions
// when the pool is available, and solves for the sources.
inline ReconstructionResult exact_reconstruct(const EncodedDataset& ds,
                                              const RecoveredSecrets& secrets,
                                              const PublicPool* pool = nullptr,
                                              const ExactOptions& opts = {}) {
  IHLAB_REQUIRE(secrets.verified, "secrets are not verified");
  IHLAB_REQUIRE(secrets.records.size() == ds.size(), "secrets cover ",
                secrets.records.size(), " of ", ds.size(), " encodings");
  const int k = ds.params.k;
  const bool subtract = pool != nullptr && k > 2;
  if (subtract) {
    IHLAB_REQUIRE(static_cast<int>(pool->size()) == ds.params.public_pool_size,
                  "pool has ", pool->size(), " images, dataset expects ",
                  ds.params.public_pool_size);
  }
  MixSystem sys;
  sys.num_sources = ds.params.num_private;
  sys.shape = ds.params.shape;
  const std::size_t d = sys.dim();
  sys.b.resize(ds.size() * d);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& rec = secrets.records[i];
    sys.rows.push_back({rec.private_indices.first, rec.private_indices.second,
                        rec.lambdas[0], rec.lambdas[1]});
    const auto& px = ds.encodings[i].pixels;
    for (std::size_t j = 0; j < d; ++j) {
      double v = rec.sigma[j] * static_cast<double>(px[j]);
      if (subtract) {
        for (std::size_t t = 0; t < rec.public_indices.size(); ++t) {
          v -= rec.lambdas[t + 2] *
               pool->images[static_cast<std::size_t>(rec.public_indices[t])][j];
        }
      }
      sys.b[i * d + j] = v;
    }
    if (!subtract && opts.noise_column && k > 2) {
      sys.noise_weights.push_back(std::max(0.0, 1.0 - rec.lambdas[0] - rec.lambdas[1]));
    }
  }
  auto out = solve_least_squares(sys, opts.ls);
  out.method = subtract ? "exact_with_pool" : "exact_demasked";
  return out;
}

}  // namespace ihlab
