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

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

namespace ihlab {

// MT19937 (Matsumoto & Nishimura, 32-bit). Written out by hand instead of
// using std::mt19937 because the seed-recovery attack depends on every draw
// being accounted for; std::mt19937 is kept as the test oracle.
//
// Draw contract used throughout the library:
//   next_u32()      one tempered output
//   next_f64()      next_u32() / 2^32, in [0,1)
//   bounded(n)      next_u32() % n  (modulo, no rejection)
//   shuffle(n)      Fisher-Yates; for i = n-1 down to 1, j = bounded(i+1),
//                   swap(perm[i], perm[j]). Exactly n-1 draws.
class MtState {
 public:
  static constexpr int kStateWords = 624;
  static constexpr std::uint32_t kDefaultSeed = 5489u;

  MtState() { seed(kDefaultSeed); }
  explicit MtState(std::uint32_t s) { seed(s); }

  void seed(std::uint32_t s) {
    state_[0] = s;
    for (int i = 1; i < kStateWords; ++i) {
      const std::uint32_t prev = state_[i - 1];
      state_[i] = 1812433253u * (prev ^ (prev >> 30)) +
                  static_cast<std::uint32_t>(i);
    }
    index_ = kStateWords;
  }

  std::uint32_t next_u32() {
    if (index_ >= kStateWords) twist();
    std::uint32_t y = state_[index_++];
    y ^= y >> 11;
    y ^= (y << 7) & 0x9d2c5680u;
    y ^= (y << 15) & 0xefc60000u;
    y ^= y >> 18;
    return y;
  }

  double next_f64() { return next_u32() * (1.0 / 4294967296.0); }

  std::uint32_t bounded(std::uint32_t n) { return next_u32() % n; }

  // Advances the stream by `count` outputs without tempering them.
  void discard(std::uint64_t count) {
    while (count > 0) {
      if (index_ >= kStateWords) twist();
      const std::uint64_t avail = static_cast<std::uint64_t>(kStateWords - index_);
      const std::uint64_t step = count < avail ? count : avail;
      index_ += static_cast<int>(step);
      count -= step;
    }
  }

  std::vector<int> shuffle(int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i >= 1; --i) {
      const auto j = static_cast<int>(bounded(static_cast<std::uint32_t>(i + 1)));
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(j)]);
    }
    return perm;
  }

  const std::array<std::uint32_t, kStateWords>& words() const { return state_; }
  int index() const { return index_; }

  friend bool operator==(const MtState&, const MtState&) = default;

  // UniformRandomBitGenerator interface, so std algorithms can borrow it.
  using result_type = std::uint32_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }
  result_type operator()() { return next_u32(); }

 private:
  void twist() {
    constexpr std::uint32_t kUpper = 0x80000000u;
    constexpr std::uint32_t kLower = 0x7fffffffu;
    constexpr std::uint32_t kMatrixA = 0x9908b0dfu;
    constexpr int kShift = 397;
    for (int i = 0; i < kStateWords; ++i) {
      const std::uint32_t y =
          (state_[i] & kUpper) | (state_[(i + 1) % kStateWords] & kLower);
      std::uint32_t v = state_[(i + kShift) % kStateWords] ^ (y >> 1);
      if (y & 1u) v ^= kMatrixA;
      state_[i] = v;
    }
    index_ = 0;
  }

  std::array<std::uint32_t, kStateWords> state_{};
  int index_ = kStateWords;
};

// Derives an independent 32-bit stream seed from (master, index) with a
// splitmix64 finalizer, so per-trial streams don't depend on scheduling.
inline std::uint32_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master * 0x9e3779b97f4a7c15ull + index + 0x632be59bd9b4e019ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return static_cast<std::uint32_t>(z ^ (z >> 32));
}

}  // namespace ihlab
