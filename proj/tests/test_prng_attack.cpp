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
#include <vector>

#include "fixtures.hpp"
#include "ihlab/metrics.hpp"
#include "ihlab/prng_attack.hpp"

namespace ihlab {
namespace {

using testing::make_setup;

TEST(SeedTest, AcceptsTrueSeedRejectsOthers) {
  const auto s = make_setup(10, {8, 8, 1}, 4, 3, 20, 777);
  const auto probe = SeedProbe::from(s.ds);
  EXPECT_EQ(test_seed(777, probe), SeedVerdict::kAccept);
  EXPECT_EQ(test_seed(777, s.ds), SeedVerdict::kAccept);
  int accepts = 0;
  for (std::uint32_t c = 0; c < 20000; ++c) {
    if (c != 777) accepts += test_seed(c, probe) == SeedVerdict::kAccept;
  }
  EXPECT_EQ(accepts, 0);
}

TEST(SeedTest, VacuousWithoutSignFlip) {
  const auto s = make_setup(10, {8, 8, 1}, 4, 3, 20, 5, false);
  EXPECT_EQ(test_seed(12345, s.ds), SeedVerdict::kVacuous);
  EXPECT_STREQ(to_string(SeedVerdict::kVacuous), "sign-flip absent, seed test vacuous");
  const auto res = search_seed(s.ds);
  EXPECT_TRUE(res.vacuous);
  EXPECT_FALSE(res.secrets.has_value());
}

TEST(SeedSearch, FindsPlantedSeedInWindow) {
  const auto s = make_setup(10, {8, 8, 1}, 4, 3, 20, 40000);
  SeedSearchConfig cfg;
  cfg.seed_lo = 30000;
  cfg.seed_hi = 50000;
  const auto res = search_seed(s.ds, cfg);
  ASSERT_TRUE(res.secrets.has_value());
  EXPECT_EQ(res.secrets->seed, 40000u);
  EXPECT_TRUE(res.secrets->verified);
  EXPECT_EQ(res.secrets->records, *s.ds.ground_truth);
  EXPECT_TRUE(res.rejected_on_verify.empty());
}

TEST(SeedSearch, ExhaustiveScanCountsEveryCandidate) {
  const auto s = make_setup(10, {8, 8, 1}, 4, 3, 20, 90);
  SeedSearchConfig cfg;
  cfg.seed_lo = 0;
  cfg.seed_hi = 9999;
  cfg.early_stop = false;
  cfg.chunk = 333;
  cfg.threads = 3;
  const auto res = search_seed(s.ds, cfg);
  EXPECT_EQ(res.tested, 10000u);
  EXPECT_EQ(res.fast_accepts, 1u);
  ASSERT_TRUE(res.secrets.has_value());
  EXPECT_EQ(res.secrets->seed, 90u);
  cfg.seed_lo = 10;
  cfg.seed_hi = 5;
  EXPECT_THROW(search_seed(s.ds, cfg), InvalidArgument);
}

TEST(SeedSearch, MissesSeedOutsideWindow) {
  const auto s = make_setup(10, {8, 8, 1}, 4, 3, 20, 123456);
  SeedSearchConfig cfg;
  cfg.seed_hi = 4095;
  const auto res = search_seed(s.ds, cfg);
  EXPECT_FALSE(res.secrets.has_value());
  EXPECT_EQ(res.tested, 4096u);
}

TEST(VerifySeed, RegeneratedRecordsReencodeBitExact) {
  const auto s = make_setup(10, {8, 8, 1}, 4, 3, 20, 31);
  const auto secrets = verify_seed(31, s.ds);
  ASSERT_TRUE(secrets.has_value());
  for (std::size_t i = 0; i < s.ds.size(); ++i) {
    EXPECT_EQ(encode_one(secrets->records[i], s.priv, s.pub), s.ds.encodings[i]);
  }
  EXPECT_FALSE(verify_seed(32, s.ds).has_value());
}

TEST(ExactReconstruct, PixelPerfectWithPool) {
  const auto s = make_setup(16, {16, 16, 1}, 4, 6, 40, 2024);
  const auto secrets = verify_seed(2024, s.ds);
  ASSERT_TRUE(secrets.has_value());
  const auto res = exact_reconstruct(s.ds, *secrets, &s.pub);
  EXPECT_EQ(res.method, "exact_with_pool");
  double worst = 0;
  for (std::size_t i = 0; i < 16; ++i) worst = std::max(worst, max_abs_error(res.images[i], s.priv.images[i]));
  EXPECT_LE(worst, 1e-5);
}

TEST(ExactReconstruct, WithoutPoolRecoversStructure) {
  const auto s = make_setup(16, {16, 16, 1}, 4, 6, 40, 2025);
  const auto secrets = verify_seed(2025, s.ds);
  ASSERT_TRUE(secrets.has_value());
  const auto res = exact_reconstruct(s.ds, *secrets);
  EXPECT_EQ(res.method, "exact_demasked");
  ASSERT_TRUE(res.noise_image.has_value());
  double total = 0;
  for (std::size_t i = 0; i < 16; ++i) total += ssim(res.images[i], s.priv.images[i]);
  EXPECT_GT(total / 16, 0.5);
  const PublicPool wrong{std::vector<Image>(3, Image({16, 16, 1}))};
  EXPECT_THROW(exact_reconstruct(s.ds, *secrets, &wrong), InvalidArgument);
}

}  // namespace
}  // namespace ihlab
