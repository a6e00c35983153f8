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

// File formats.
//
// IHED tensor container:
//   bytes 0..3   "IHED"
//   u32 LE       version (1)
//   u32 LE       header length in bytes
//   header       ASCII "key=value\n" lines; always has kind, count, shape
//                (HxWxC), label_width, payload_bytes
//   payload      count records, each: H*W*C float32 LE pixels followed by
//                label_width float64 LE label entries
//
// Labels are stored as float64 so that mixing weights read back from a
// label are exact to well below 1e-9.
//
// Truth sidecar (".truth"):
//   "IHTR", u32 version, u32 header length, header (count, k, d), then per
//   record: i32 private_a, i32 private_b, i32 epoch, (k-2) x i32 public
//   indices, k x float64 lambdas, d x int8 sigma.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ihlab/core/types.hpp"

namespace ihlab {

// A generic decoded IHED file.
struct TensorFile {
  std::string kind;
  std::map<std::string, std::string> header;  // every key, including extras
  Shape shape;
  std::vector<Image> tensors;
  std::vector<std::vector<double>> labels;  // empty when label_width == 0
};

namespace io_detail {

inline constexpr char kMagic[4] = {'I', 'H', 'E', 'D'};
inline constexpr char kTruthMagic[4] = {'I', 'H', 'T', 'R'};
inline constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::uint8_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
}

class Reader {
 public:
  Reader(const std::string& data, std::size_t pos = 0) : data_(data), pos_(pos) {}

  template <typename T>
  T get_le(const char* field) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4,
                                                     std::uint32_t, std::uint8_t>>;
    need(sizeof(T), field);
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i]))
              << (8 * i);
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string get_bytes(std::size_t n, const char* field) {
    need(n, field);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n, const char* field) const {
    if (data_.size() - pos_ < n) {
      throw ParseError(field, "file truncated");
    }
  }

  const std::string& data_;
  std::size_t pos_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void spit(const std::filesystem::path& path, const std::string& data) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

inline std::map<std::string, std::string> parse_header(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ParseError("header", "line without key=value: '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline const std::string& require_key(
    const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(key, "missing header field");
  return it->second;
}

inline long long parse_int(const std::map<std::string, std::string>& kv,
                           const std::string& key) {
  const std::string& s = require_key(kv, key);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(key, "not an integer: '" + s + "'");
  }
}

}  // namespace io_detail

inline Shape parse_shape(const std::string& text) {
  Shape s;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> s.height >> x1 >> s.width >> x2 >> s.channels) || x1 != 'x' ||
      x2 != 'x' || !s.valid() || in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("shape", "expected HxWxC, got '" + text + "'");
  }
  return s;
}

inline std::string encode_tensor_file(const TensorFile& file) {
  const std::size_t label_width = file.labels.empty() ? 0 : file.labels[0].size();
  IHLAB_REQUIRE(file.labels.empty() || file.labels.size() == file.tensors.size(),
                "label count does not match tensor count");
  const std::uint64_t per_record =
      file.shape.size() * sizeof(float) + label_width * sizeof(double);
  const std::uint64_t payload = per_record * file.tensors.size();

  std::map<std::string, std::string> header = file.header;
  header["kind"] = file.kind;
  header["count"] = std::to_string(file.tensors.size());
  header["shape"] = to_string(file.shape);
  header["label_width"] = std::to_string(label_width);
  header["payload_bytes"] = std::to_string(payload);
  std::string text;
  for (const auto& [k, v] : header) text += k + "=" + v + "\n";

  std::string out;
  out.reserve(12 + text.size() + payload);
  out.append(io_detail::kMagic, 4);
  io_detail::put_le<std::uint32_t>(out, io_detail::kVersion);
  io_detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (std::size_t i = 0; i < file.tensors.size(); ++i) {
    IHLAB_REQUIRE(file.tensors[i].shape() == file.shape, "tensor ", i,
                  " has shape ", to_string(file.tensors[i].shape()));
    for (float p : file.tensors[i].pixels()) io_detail::put_le<float>(out, p);
    if (label_width > 0) {
      IHLAB_REQUIRE(file.labels[i].size() == label_width, "label ", i,
                    " has width ", file.labels[i].size());
      for (double v : file.labels[i]) io_detail::put_le<double>(out, v);
    }
  }
  return out;
}

inline TensorFile decode_tensor_file(const std::string& data) {
  io_detail::Reader r(data);
  if (r.get_bytes(4, "magic") != std::string(io_detail::kMagic, 4)) {
    throw ParseError("magic", "not an IHED file");
  }
  const auto version = r.get_le<std::uint32_t>("version");
  if (version != io_detail::kVersion) {
    throw ParseError("version", "unsupported version " + std::to_string(version));
  }
  const auto header_len = r.get_le<std::uint32_t>("header_length");
  TensorFile file;
  file.header = io_detail::parse_header(r.get_bytes(header_len, "header"));
  file.kind = io_detail::require_key(file.header, "kind");
  file.shape = parse_shape(io_detail::require_key(file.header, "shape"));
  const long long count = io_detail::parse_int(file.header, "count");
  const long long label_width = io_detail::parse_int(file.header, "label_width");
  const long long payload = io_detail::parse_int(file.header, "payload_bytes");
  if (count < 0) throw ParseError("count", "negative");
  if (label_width < 0) throw ParseError("label_width", "negative");
  const std::uint64_t per_record =
      file.shape.size() * sizeof(float) +
      static_cast<std::uint64_t>(label_width) * sizeof(double);
  if (payload < 0 ||
      static_cast<std::uint64_t>(payload) !=
          per_record * static_cast<std::uint64_t>(count)) {
    throw ParseError("payload_bytes",
                     "declared " + std::to_string(payload) +
                         " bytes, shape/count imply " +
                         std::to_string(per_record * count));
  }
  if (r.remaining() != static_cast<std::uint64_t>(payload)) {
    throw ParseError("payload_bytes",
                     "declared " + std::to_string(payload) + " bytes, file has " +
                         std::to_string(r.remaining()));
  }
  file.tensors.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    std::vector<float> px(file.shape.size());
    for (auto& p : px) p = r.get_le<float>("payload");
    file.tensors.emplace_back(file.shape, std::move(px));
    if (label_width > 0) {
      std::vector<double> lab(static_cast<std::size_t>(label_width));
      for (auto& v : lab) v = r.get_le<double>("payload");
      file.labels.push_back(std::move(lab));
    }
  }
  return file;
}

inline void write_tensor_file(const TensorFile& file,
                              const std::filesystem::path& path) {
  io_detail::spit(path, encode_tensor_file(file));
}

inline TensorFile read_tensor_file(const std::filesystem::path& path) {
  return decode_tensor_file(io_detail::slurp(path));
}

// ---------------------------------------------------------------------------
// Encoded datasets.

inline std::filesystem::path truth_path_for(const std::filesystem::path& path) {
  auto p = path;
  p.replace_extension(".truth");
  return p;
}

inline std::string encode_truth(const std::vector<MixRecord>& records, int k,
                                std::size_t d) {
  std::string text = "count=" + std::to_string(records.size()) +
                     "\nk=" + std::to_string(k) + "\nd=" + std::to_string(d) +
                     "\n";
  std::string out(io_detail::kTruthMagic, 4);
  io_detail::put_le<std::uint32_t>(out, io_detail::kVersion);
  io_detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& rec : records) {
    IHLAB_REQUIRE(static_cast<int>(rec.lambdas.size()) == k &&
                      static_cast<int>(rec.public_indices.size()) == k - 2 &&
                      rec.sigma.size() == d,
                  "record does not match k=", k, " d=", d);
    io_detail::put_le<std::int32_t>(out, rec.private_indices.first);
    io_detail::put_le<std::int32_t>(out, rec.private_indices.second);
    io_detail::put_le<std::int32_t>(out, rec.epoch);
    for (int p : rec.public_indices) io_detail::put_le<std::int32_t>(out, p);
    for (double l : rec.lambdas) io_detail::put_le<double>(out, l);
    for (auto s : rec.sigma) out.push_back(static_cast<char>(s));
  }
  return out;
}

inline std::vector<MixRecord> decode_truth(const std::string& data) {
  io_detail::Reader r(data);
  if (r.get_bytes(4, "magic") != std::string(io_detail::kTruthMagic, 4)) {
    throw ParseError("magic", "not a truth sidecar");
  }
  const auto version = r.get_le<std::uint32_t>("version");
  if (version != io_detail::kVersion) {
    throw ParseError("version", "unsupported version " + std::to_string(version));
  }
  const auto header_len = r.get_le<std::uint32_t>("header_length");
  const auto kv = io_detail::parse_header(r.get_bytes(header_len, "header"));
  const long long count = io_detail::parse_int(kv, "count");
  const long long k = io_detail::parse_int(kv, "k");
  const long long d = io_detail::parse_int(kv, "d");
  if (count < 0) throw ParseError("count", "negative");
  if (k < 2) throw ParseError("k", "must be >= 2");
  if (d < 1) throw ParseError("d", "must be >= 1");
  const std::uint64_t per_record = 3 * 4 + (k - 2) * 4 + k * 8 + d;
  if (r.remaining() != per_record * static_cast<std::uint64_t>(count)) {
    throw ParseError("payload", "expected " +
                                    std::to_string(per_record * count) +
                                    " bytes, file has " +
                                    std::to_string(r.remaining()));
  }
  std::vector<MixRecord> records(static_cast<std::size_t>(count));
  for (auto& rec : records) {
    rec.private_indices.first = r.get_le<std::int32_t>("payload");
    rec.private_indices.second = r.get_le<std::int32_t>("payload");
    rec.epoch = r.get_le<std::int32_t>("payload");
    rec.public_indices.resize(static_cast<std::size_t>(k - 2));
    for (auto& p : rec.public_indices) p = r.get_le<std::int32_t>("payload");
    rec.lambdas.resize(static_cast<std::size_t>(k));
    for (auto& l : rec.lambdas) l = r.get_le<double>("payload");
    rec.sigma.resize(static_cast<std::size_t>(d));
    for (auto& s : rec.sigma) {
      s = static_cast<std::int8_t>(r.get_le<std::uint8_t>("payload"));
      if (s != 1 && s != -1) throw ParseError("sigma", "entry is not +-1");
    }
  }
  return records;
}

inline void write_truth(const std::vector<MixRecord>& records, int k,
                        std::size_t d, const std::filesystem::path& path) {
  io_detail::spit(path, encode_truth(records, k, d));
}

inline std::vector<MixRecord> read_truth(const std::filesystem::path& path) {
  return decode_truth(io_detail::slurp(path));
}

inline TensorFile to_tensor_file(const EncodedDataset& ds) {
  TensorFile f;
  f.kind = "encoded";
  f.shape = ds.params.shape;
  f.header["k"] = std::to_string(ds.params.k);
  f.header["epochs"] = std::to_string(ds.params.epochs);
  f.header["num_private"] = std::to_string(ds.params.num_private);
  f.header["num_classes"] = std::to_string(ds.params.num_classes);
  f.header["public_pool_size"] = std::to_string(ds.params.public_pool_size);
  f.header["sign_flip"] = ds.params.sign_flip ? "1" : "0";
  f.tensors.reserve(ds.size());
  for (const auto& e : ds.encodings) {
    f.tensors.push_back(e.pixels);
    f.labels.push_back(e.label.probs);
  }
  return f;
}

inline EncodedDataset from_tensor_file(const TensorFile& f) {
  if (f.kind != "encoded") {
    throw ParseError("kind", "expected 'encoded', got '" + f.kind + "'");
  }
  EncodedDataset ds;
  ds.params.shape = f.shape;
  ds.params.k = static_cast<int>(io_detail::parse_int(f.header, "k"));
  ds.params.epochs = static_cast<int>(io_detail::parse_int(f.header, "epochs"));
  ds.params.num_private =
      static_cast<int>(io_detail::parse_int(f.header, "num_private"));
  ds.params.num_classes =
      static_cast<int>(io_detail::parse_int(f.header, "num_classes"));
  ds.params.public_pool_size =
      static_cast<int>(io_detail::parse_int(f.header, "public_pool_size"));
  ds.params.sign_flip = io_detail::parse_int(f.header, "sign_flip") != 0;
  if (ds.params.k < 2) throw ParseError("k", "must be >= 2");
  if (!f.tensors.empty() &&
      static_cast<int>(f.labels.size()) != static_cast<int>(f.tensors.size())) {
    throw ParseError("label_width", "encoded datasets carry labels");
  }
  if (!f.labels.empty() &&
      static_cast<int>(f.labels[0].size()) != ds.params.num_classes) {
    throw ParseError("label_width", "does not match num_classes");
  }
  ds.encodings.reserve(f.tensors.size());
  for (std::size_t i = 0; i < f.tensors.size(); ++i) {
    ds.encodings.push_back({f.tensors[i], LabelVector{f.labels[i]}});
  }
  return ds;
}

// Writes the container, plus the ".truth" sidecar when ground truth is
// present. The sidecar lives in a separate file so attacks can run blind.
inline void write_dataset(const EncodedDataset& ds,
                          const std::filesystem::path& path) {
  write_tensor_file(to_tensor_file(ds), path);
  if (ds.ground_truth) {
    write_truth(*ds.ground_truth, ds.params.k, ds.params.shape.size(),
                truth_path_for(path));
  }
}

// Reads only the container. Ground truth is loaded separately with
// read_truth() by evaluation code.
inline EncodedDataset read_dataset(const std::filesystem::path& path) {
  return from_tensor_file(read_tensor_file(path));
}

// Plain image sets (private originals, public pools).
inline void write_images(const std::vector<Image>& images,
                         const std::vector<LabelVector>* labels,
                         const std::filesystem::path& path) {
  IHLAB_REQUIRE(!images.empty(), "no images to write");
  TensorFile f;
  f.kind = "images";
  f.shape = images[0].shape();
  f.tensors = images;
  if (labels != nullptr) {
    for (const auto& l : *labels) f.labels.push_back(l.probs);
  }
  write_tensor_file(f, path);
}

inline TensorFile read_images(const std::filesystem::path& path) {
  TensorFile f = read_tensor_file(path);
  if (f.kind != "images") {
    throw ParseError("kind", "expected 'images', got '" + f.kind + "'");
  }
  return f;
}

// ---------------------------------------------------------------------------
// PGM (P5) / PPM (P6), maxval 255, pixel p -> round(255 * clamp(p, 0, 1)).

inline std::uint8_t to_byte(float p) {
  const double c = std::clamp(static_cast<double>(p), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * c));
}

inline std::string encode_pnm(const Image& img) {
  const Shape& s = img.shape();
  IHLAB_REQUIRE(s.channels == 1 || s.channels == 3,
                "PNM export needs 1 or 3 channels, got ", s.channels);
  std::string out = (s.channels == 1 ? "P5\n" : "P6\n") +
                    std::to_string(s.width) + " " + std::to_string(s.height) +
                    "\n255\n";
  for (float p : img.pixels()) out.push_back(static_cast<char>(to_byte(p)));
  return out;
}

inline Image decode_pnm(const std::string& data) {
  std::istringstream in(data);
  auto next_token = [&](const char* field) {
    std::string tok;
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      break;
    }
    if (!(in >> tok)) throw ParseError(field, "missing");
    return tok;
  };
  const std::string magic = next_token("magic");
  if (magic != "P5" && magic != "P6") {
    throw ParseError("magic", "expected P5 or P6, got '" + magic + "'");
  }
  Shape s;
  s.channels = magic == "P5" ? 1 : 3;
  try {
    s.width = std::stoi(next_token("width"));
    s.height = std::stoi(next_token("height"));
    if (std::stoi(next_token("maxval")) != 255) {
      throw ParseError("maxval", "only 255 is supported");
    }
  } catch (const std::invalid_argument&) {
    throw ParseError("header", "non-numeric PNM header");
  }
  if (!s.valid()) throw ParseError("shape", "non-positive dimensions");
  in.get();  // single whitespace byte before raster
  const auto start = static_cast<std::size_t>(in.tellg());
  if (data.size() - start != s.size()) {
    throw ParseError("raster", "expected " + std::to_string(s.size()) +
                                   " bytes, found " +
                                   std::to_string(data.size() - start));
  }
  std::vector<float> px(s.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<unsigned char>(data[start + i]) / 255.0f;
  }
  return Image(s, std::move(px));
}

inline void write_pnm(const Image& img, const std::filesystem::path& path) {
  io_detail::spit(path, encode_pnm(img));
}

inline Image read_pnm(const std::filesystem::path& path) {
  return decode_pnm(io_detail::slurp(path));
}

}  // namespace ihlab
