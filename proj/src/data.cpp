// Copyright 2026 The dpclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dpclip/data.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>

#include "dpclip/errors.hpp"
#include "dpclip/rng.hpp"

namespace dpclip::data {
namespace {

std::size_t element_size(std::uint8_t type) {
  switch (type) {
    case 0x08:
    case 0x09:
      return 1;
    case 0x0B:
      return 2;
    case 0x0C:
    case 0x0D:
      return 4;
    case 0x0E:
      return 8;
    default:
      throw ParseError("IDX: unknown element type 0x" + std::to_string(type));
  }
}

std::uint64_t read_be(const std::uint8_t* p, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v = (v << 8) | p[i];
  return v;
}

void write_be(std::vector<std::uint8_t>& out, std::uint64_t v, std::size_t n) {
  for (std::size_t i = n; i-- > 0;) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

double decode(std::uint8_t type, const std::uint8_t* p) {
  switch (type) {
    case 0x08:
      return p[0];
    case 0x09:
      return static_cast<std::int8_t>(p[0]);
    case 0x0B:
      return static_cast<std::int16_t>(read_be(p, 2));
    case 0x0C:
      return static_cast<std::int32_t>(read_be(p, 4));
    case 0x0D:
      return std::bit_cast<float>(static_cast<std::uint32_t>(read_be(p, 4)));
    default:
      return std::bit_cast<double>(read_be(p, 8));
  }
}

void encode(std::vector<std::uint8_t>& out, std::uint8_t type, double v) {
  switch (type) {
    case 0x08:
      out.push_back(static_cast<std::uint8_t>(v));
      break;
    case 0x09:
      out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(v)));
      break;
    case 0x0B:
      write_be(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)), 2);
      break;
    case 0x0C:
      write_be(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(v)), 4);
      break;
    case 0x0D:
      write_be(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
      break;
    default:
      write_be(out, std::bit_cast<std::uint64_t>(v), 8);
      break;
  }
}

}  // namespace

Batch synthetic_blobs(const Shape& sample_shape, std::size_t classes, std::size_t count,
                      std::uint64_t seed, double noise) {
  if (classes < 2 || count == 0) throw ShapeError("synthetic_blobs: need >= 2 classes and >= 1 sample");
  Rng rng(seed);
  const std::size_t n = numel(sample_shape);
  std::vector<std::vector<double>> prototypes(classes, std::vector<double>(n));
  for (auto& proto : prototypes)
    for (double& v : proto) v = rng.gaussian();
  Shape shape{count};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  Batch out{Tensor(shape), {}};
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t y = i % classes;
    auto dst = out.inputs.outer(i);
    for (std::size_t j = 0; j < n; ++j) dst[j] = prototypes[y][j] + noise * rng.gaussian();
    out.labels.push_back(y);
  }
  return out;
}

IdxArray parse_idx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || bytes[0] != 0 || bytes[1] != 0) throw ParseError("IDX: bad magic number");
  IdxArray out;
  out.type = bytes[2];
  const std::size_t rank = bytes[3];
  const std::size_t esize = element_size(out.type);
  if (rank == 0) throw ParseError("IDX: zero dimensions");
  if (bytes.size() < 4 + 4 * rank) throw ParseError("IDX: truncated header");
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    out.dims.push_back(static_cast<std::uint32_t>(read_be(bytes.data() + 4 + 4 * i, 4)));
    count *= out.dims.back();
  }
  const std::size_t offset = 4 + 4 * rank;
  if (bytes.size() != offset + count * esize) {
    throw ParseError("IDX: expected " + std::to_string(count * esize) + " data bytes, found " +
                     std::to_string(bytes.size() - offset));
  }
  out.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) out.values[i] = decode(out.type, bytes.data() + offset + i * esize);
  return out;
}

std::vector<std::uint8_t> encode_idx(const IdxArray& array) {
  const std::size_t esize = element_size(array.type);
  std::size_t count = 1;
  for (std::uint32_t d : array.dims) count *= d;
  if (array.dims.empty() || array.dims.size() > 255 || count != array.values.size()) {
    throw ShapeError("IDX: dimensions do not match the value count");
  }
  std::vector<std::uint8_t> out{0, 0, array.type, static_cast<std::uint8_t>(array.dims.size())};
  for (std::uint32_t d : array.dims) write_be(out, d, 4);
  out.reserve(out.size() + count * esize);
  for (double v : array.values) encode(out, array.type, v);
  return out;
}

IdxArray read_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open IDX file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_idx(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_idx(const std::string& path, const IdxArray& array) {
  const auto bytes = encode_idx(array);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write IDX file '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Batch load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
  const IdxArray images = read_idx(images_path);
  const IdxArray labels = read_idx(labels_path);
  if (images.dims.size() < 3 || images.dims.size() > 4) throw ParseError("IDX images must be (N,H,W) or (N,H,W,C)");
  if (labels.dims.size() != 1 || labels.dims[0] != images.dims[0]) {
    throw ParseError("IDX labels must be a vector with one entry per image");
  }
  Shape shape(images.dims.begin(), images.dims.end());
  if (shape.size() == 3) shape.push_back(1);
  const double scale = images.type == 0x08 ? 1.0 / 255.0 : 1.0;
  std::vector<double> values(images.values);
  for (double& v : values) v *= scale;

  std::map<long long, std::size_t> remap;
  for (double v : labels.values) remap.emplace(static_cast<long long>(v), 0);
  std::size_t next = 0;
  for (auto& [raw, idx] : remap) idx = next++;
  Batch out{Tensor(shape, std::move(values)), {}};
  for (double v : labels.values) out.labels.push_back(remap.at(static_cast<long long>(v)));
  return out;
}

Batch load_idx_spec(const std::string& spec) {
  const std::string body = spec.rfind("idx:", 0) == 0 ? spec.substr(4) : spec;
  const auto comma = body.find(',');
  if (comma != std::string::npos) return load_idx_dataset(body.substr(0, comma), body.substr(comma + 1));
  const std::filesystem::path dir(body);
  return load_idx_dataset((dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string());
}

}  // namespace dpclip::data
