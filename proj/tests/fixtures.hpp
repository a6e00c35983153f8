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

#include "ihlab/encoder.hpp"
#include "ihlab/synthetic.hpp"

namespace ihlab::testing {

struct Setup {
  PrivateDataset priv;
  PublicPool pub;
  EncodedDataset ds;
};

inline Setup make_setup(int num_private, Shape shape, int k, int epochs, int pool,
                        std::uint32_t seed, bool flip = true,
                        std::uint32_t data_seed = 7, int classes = 10) {
  Setup s;
  s.priv = generate_synthetic(num_private, shape, classes, data_seed);
  s.pub = generate_public_pool(pool, shape, data_seed);
  EncoderConfig cfg;
  cfg.k = k;
  cfg.epochs = epochs;
  cfg.public_pool_size = pool;
  cfg.sign_flip = flip;
  cfg.seed = seed;
  s.ds = encode_dataset(s.priv, s.pub, cfg);
  return s;
}

}  // namespace ihlab::testing
