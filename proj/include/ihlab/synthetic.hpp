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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "ihlab/core/mt19937.hpp"
#include "ihlab/core/types.hpp"
#include "ihlab/encoder.hpp"

namespace ihlab {

namespace synth_detail {

inline double uniform(MtState& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.next_f64();
}

enum class ShapeKind { kRect = 0, kDisc = 1, kBar = 2 };

inline void paint(Image& img, ShapeKind kind, double cy, double cx, double ry,
                  double rx, double angle, const double* color) {
  const Shape& s = img.shape();
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const double dy = y + 0.5 - cy;
      const double dx = x + 0.5 - cx;
      bool inside = false;
      switch (kind) {
        case ShapeKind::kRect:
          inside = std::fabs(dy) <= ry && std::fabs(dx) <= rx;
          break;
        case ShapeKind::kDisc:
          inside = (dy * dy) / (ry * ry) + (dx * dx) / (rx * rx) <= 1.0;
          break;
        case ShapeKind::kBar: {
          const double u = ca * dx + sa * dy;
          const double v = -sa * dx + ca * dy;
          inside = std::fabs(u) <= rx * 1.6 && std::fabs(v) <= std::max(0.8, ry * 0.35);
          break;
        }
      }
      if (!inside) continue;
      for (int c = 0; c < s.channels; ++c) {
        img.at(y, x, c) = static_cast<float>(color[c]);
      }
    }
  }
}

// One structured image: smooth background with a random-direction gradient,
// then 4-7 rectangles, discs, or bars. The first shape's kind and quadrant
// follow `cls` when it is non-negative.
inline Image draw_image(MtState& rng, Shape shape, int cls) {
  Image img(shape);
  const double h = shape.height, w = shape.width;
  double base[4], grad[4];
  for (int c = 0; c < shape.channels && c < 4; ++c) {
    base[c] = uniform(rng, 0.05, 0.35);
    grad[c] = uniform(rng, -0.2, 0.2);
  }
  const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double gy = std::sin(theta), gx = std::cos(theta);
  for (int y = 0; y < shape.height; ++y) {
    for (int x = 0; x < shape.width; ++x) {
      const double t = ((y + 0.5) / h - 0.5) * gy + ((x + 0.5) / w - 0.5) * gx;
      for (int c = 0; c < shape.channels; ++c) {
        img.at(y, x, c) = static_cast<float>(base[c % 4] + grad[c % 4] * t * 2.0);
      }
    }
  }
  const int num_shapes = 4 + static_cast<int>(rng.bounded(4));
  for (int s = 0; s < num_shapes; ++s) {
    ShapeKind kind = static_cast<ShapeKind>(rng.bounded(3));
    double cy = uniform(rng, 0.15, 0.85) * h;
    double cx = uniform(rng, 0.15, 0.85) * w;
    if (s == 0 && cls >= 0) {
      kind = static_cast<ShapeKind>(cls % 3);
      const int quadrant = (cls / 3) % 4;
      cy = (quadrant / 2 == 0 ? uniform(rng, 0.2, 0.5) : uniform(rng, 0.5, 0.8)) * h;
      cx = (quadrant % 2 == 0 ? uniform(rng, 0.2, 0.5) : uniform(rng, 0.5, 0.8)) * w;
    }
    const double ry = uniform(rng, 0.06, 0.2) * h;
    const double rx = uniform(rng, 0.06, 0.2) * w;
    const double angle = uniform(rng, 0.0, std::numbers::pi);
    double color[16];
    const double level = uniform(rng, 0.4, 1.0);
    for (int c = 0; c < shape.channels && c < 16; ++c) {
      color[c] = std::clamp(level + uniform(rng, -0.2, 0.2), 0.0, 1.0);
    }
    paint(img, kind, cy, cx, ry, rx, angle, color);
  }
  return clamp_image(std::move(img), 0.0f, 1.0f);
}

}  // namespace synth_detail

// Labeled structured images, balanced across classes (image i has class
// i mod num_classes).
inline PrivateDataset generate_synthetic(int count, Shape shape, int num_classes,
                                         std::uint32_t seed) {
  IHLAB_REQUIRE(shape.valid(), "invalid shape ", to_string(shape));
  IHLAB_REQUIRE(shape.channels <= 16, "at most 16 channels supported");
  IHLAB_REQUIRE(num_classes >= 1, "need at least one class");
  IHLAB_REQUIRE(count >= num_classes, "count ", count, " < num_classes ",
                num_classes);
  MtState rng(seed);
  PrivateDataset ds;
  for (int i = 0; i < count; ++i) {
    const int cls = i % num_classes;
    ds.images.push_back(synth_detail::draw_image(rng, shape, cls));
    ds.labels.push_back(LabelVector::one_hot(num_classes, cls));
  }
  return ds;
}

inline PublicPool generate_public_pool(int count, Shape shape, std::uint32_t seed) {
  IHLAB_REQUIRE(shape.valid(), "invalid shape ", to_string(shape));
  IHLAB_REQUIRE(count >= 0, "negative pool size");
  // Distinct stream from the private generator for the same seed.
  MtState rng(derive_seed(seed, 0x7075626cull));
  PublicPool pool;
  for (int i = 0; i < count; ++i) {
    pool.images.push_back(synth_detail::draw_image(rng, shape, -1));
  }
  return pool;
}

}  // namespace ihlab
