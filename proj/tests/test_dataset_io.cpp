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

#include <filesystem>
#include <string>

#include "ihlab/core/dataset_io.hpp"
#include "ihlab/encoder.hpp"
#include "ihlab/synthetic.hpp"

namespace ihlab {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ihlab_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

EncodedDataset small_dataset(std::uint32_t seed = 3) {
  const Shape sh{8, 8, 1};
  auto priv = generate_synthetic(6, sh, 3, seed);
  auto pub = generate_public_pool(10, sh, seed);
  EncoderConfig cfg;
  cfg.k = 4;
  cfg.epochs = 2;
  cfg.public_pool_size = 10;
  cfg.seed = seed;
  return encode_dataset(priv, pub, cfg);
}

using DatasetIo = TempDir;

TEST_F(DatasetIo, RoundTripIsExact) {
  const auto ds = small_dataset();
  const auto path = dir_ / "data.ihed";
  write_dataset(ds, path);
  ASSERT_TRUE(fs::exists(truth_path_for(path)));
  const auto back = read_dataset(path);
  EXPECT_FALSE(back.ground_truth.has_value());
  EXPECT_EQ(back.params, ds.params);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.encodings[i], ds.encodings[i]);
  EXPECT_EQ(read_truth(truth_path_for(path)), *ds.ground_truth);
}

TEST_F(DatasetIo, SameInputsGiveIdenticalBytes) {
  write_dataset(small_dataset(), dir_ / "a.ihed");
  write_dataset(small_dataset(), dir_ / "b.ihed");
  EXPECT_EQ(io_detail::slurp(dir_ / "a.ihed"), io_detail::slurp(dir_ / "b.ihed"));
  EXPECT_EQ(io_detail::slurp(dir_ / "a.truth"), io_detail::slurp(dir_ / "b.truth"));
}

TEST(DatasetIoParse, RejectsCorruption) {
  const auto bytes = encode_tensor_file(to_tensor_file(small_dataset()));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_tensor_file(bad_magic), ParseError);
  EXPECT_THROW(decode_tensor_file(bytes.substr(0, bytes.size() - 1)), ParseError);
  EXPECT_THROW(decode_tensor_file(bytes + "x"), ParseError);
  EXPECT_THROW(decode_tensor_file(""), ParseError);
}

TEST(DatasetIoParse, TruthRejectsCorruption) {
  const auto ds = small_dataset();
  const auto bytes = encode_truth(*ds.ground_truth, ds.params.k, ds.params.shape.size());
  EXPECT_EQ(decode_truth(bytes), *ds.ground_truth);
  EXPECT_THROW(decode_truth(bytes.substr(0, bytes.size() - 3)), ParseError);
  auto bad = bytes;
  bad[1] = '?';
  EXPECT_THROW(decode_truth(bad), ParseError);
}

TEST_F(DatasetIo, ImagesRoundTrip) {
  const auto priv = generate_synthetic(4, {5, 7, 3}, 2, 1);
  write_images(priv.images, &priv.labels, dir_ / "priv.ihed");
  const auto f = read_images(dir_ / "priv.ihed");
  EXPECT_EQ(f.tensors, priv.images);
  ASSERT_EQ(f.labels.size(), 4u);
  EXPECT_EQ(f.labels[1], priv.labels[1].probs);
  EXPECT_THROW(read_dataset(dir_ / "priv.ihed"), ParseError);
}

TEST(Pnm, RoundTripQuantizes) {
  for (int c : {1, 3}) {
    Image img({3, 4, c});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i % 7) / 6.0f;
    const Image back = decode_pnm(encode_pnm(img));
    ASSERT_EQ(back.shape(), img.shape());
    for (std::size_t i = 0; i < img.size(); ++i) {
      EXPECT_NEAR(back[i], img[i], 0.5 / 255.0 + 1e-7);
    }
  }
  EXPECT_EQ(to_byte(-1.0f), 0);
  EXPECT_EQ(to_byte(2.0f), 255);
  EXPECT_THROW(encode_pnm(Image({2, 2, 2})), InvalidArgument);
  EXPECT_THROW(decode_pnm("P4\n1 1\n255\n\x01"), ParseError);
}

TEST(Shape, ParseAndPrint) {
  const Shape s = parse_shape("16x12x3");
  EXPECT_EQ(s, (Shape{16, 12, 3}));
  EXPECT_EQ(to_string(s), "16x12x3");
  EXPECT_THROW(parse_shape("16x12"), ParseError);
}

}  // namespace
}  // namespace ihlab
