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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ihlab {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad shapes, bad weights, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `field()` names the offending header field or
// section so callers can report something better than "bad file".
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& what)
      : Error("parse error in '" + field + "': " + what),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {
template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}
}  // namespace detail

#define IHLAB_REQUIRE(cond, ...)                                   \
  do {                                                             \
    if (!(cond)) {                                                 \
      throw ::ihlab::InvalidArgument(::ihlab::detail::concat(      \
          __func__, ": ", __VA_ARGS__));                           \
    }                                                              \
  } while (0)

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool valid() const { return height > 0 && width > 0 && channels > 0; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return detail::concat(s.height, "x", s.width, "x", s.channels);
}

// Dense HxWxC tensor in row-major, channel-last order. Plain images live in
// [0,1]; encodings live in [-1,1].
class Image {
 public:
  Image() = default;
  explicit Image(Shape shape, float fill = 0.0f)
      : shape_(shape), pixels_(shape.size(), fill) {}
  Image(Shape shape, std::vector<float> pixels)
      : shape_(shape), pixels_(std::move(pixels)) {
    IHLAB_REQUIRE(pixels_.size() == shape_.size(), "pixel count ",
                  pixels_.size(), " does not match shape ", to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return pixels_.size(); }

  float& at(int y, int x, int c) { return pixels_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return pixels_[index(y, x, c)]; }
  float& operator[](std::size_t i) { return pixels_[i]; }
  float operator[](std::size_t i) const { return pixels_[i]; }

  std::span<float> pixels() { return pixels_; }
  std::span<const float> pixels() const { return pixels_; }

  bool in_range(float lo, float hi) const {
    for (float p : pixels_) {
      if (!(p >= lo && p <= hi)) return false;
    }
    return true;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * shape_.width + x) * shape_.channels +
           c;
  }

  Shape shape_;
  std::vector<float> pixels_;
};

// Class-probability vector. One-hot for private labels; a two-entry mixture
// (with total mass lambda_1 + lambda_2) for encoded labels.
struct LabelVector {
  std::vector<double> probs;

  static LabelVector one_hot(int num_classes, int cls) {
    LabelVector v;
    v.probs.assign(static_cast<std::size_t>(num_classes), 0.0);
    v.probs.at(static_cast<std::size_t>(cls)) = 1.0;
    return v;
  }

  int num_classes() const { return static_cast<int>(probs.size()); }

  double sum() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }

  // Index of the single 1 entry, or nullopt if not one-hot.
  std::optional<int> one_hot_class() const {
    std::optional<int> cls;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] == 1.0) {
        if (cls) return std::nullopt;
        cls = static_cast<int>(i);
      } else if (probs[i] != 0.0) {
        return std::nullopt;
      }
    }
    return cls;
  }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

struct EncodedImage {
  Image pixels;
  LabelVector label;

  friend bool operator==(const EncodedImage&, const EncodedImage&) = default;
};

// Ground-truth provenance of one encoding (the phi map plus lambda, sigma).
struct MixRecord {
  std::pair<int, int> private_indices{0, 0};
  std::vector<int> public_indices;
  std::vector<double> lambdas;  // length k
  std::vector<std::int8_t> sigma;  // length d, entries +-1
  int epoch = 0;

  friend bool operator==(const MixRecord&, const MixRecord&) = default;
};

struct DatasetParams {
  int k = 2;
  int epochs = 1;
  int num_private = 0;
  int num_classes = 0;
  int public_pool_size = 0;
  bool sign_flip = true;
  Shape shape;

  friend bool operator==(const DatasetParams&, const DatasetParams&) = default;
};

struct EncodedDataset {
  std::vector<EncodedImage> encodings;
  DatasetParams params;
  // Sidecar; attacks never read it.
  std::optional<std::vector<MixRecord>> ground_truth;

  std::size_t size() const { return encodings.size(); }
};

inline bool is_sign_vector(std::span<const std::int8_t> sigma) {
  for (auto s : sigma) {
    if (s != 1 && s != -1) return false;
  }
  return true;
}

inline Image abs_image(const Image& img) {
  Image out = img;
  for (auto& p : out.pixels()) p = std::fabs(p);
  return out;
}

inline Image clamp_image(Image img, float lo, float hi) {
  for (auto& p : img.pixels()) p = p < lo ? lo : (p > hi ? hi : p);
  return img;
}

}  // namespace ihlab
