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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpclip/net.hpp"
#include "dpclip/tensor.hpp"

namespace dpclip::data {

/// Gaussian-blob classification: each class has a fixed random prototype of
/// the given per-sample shape; a sample is its class prototype plus
/// `noise`·𝒩(0, I). Labels cycle 0, 1, ..., classes−1.
Batch synthetic_blobs(const Shape& sample_shape, std::size_t classes, std::size_t count,
                      std::uint64_t seed, double noise = 1.0);

/// Contents of an IDX file (big-endian header, magic 0x00 0x00 type rank).
struct IdxArray {
  std::uint8_t type = 0x08;  // 0x08 u8, 0x09 i8, 0x0B i16, 0x0C i32, 0x0D f32, 0x0E f64
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

IdxArray read_idx(const std::string& path);
IdxArray parse_idx(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_idx(const IdxArray& array);
void write_idx(const std::string& path, const IdxArray& array);

/// Images (N, H, W) or (N, H, W, C) plus labels (N). Pixel values are divided
/// by 255 for unsigned-byte images. Labels are remapped to 0..K−1 in
/// ascending order of their original values.
Batch load_idx_dataset(const std::string& images_path, const std::string& labels_path);

/// Resolves "idx:IMAGES,LABELS" or "idx:DIR" (DIR holding the standard
/// train-images-idx3-ubyte / train-labels-idx1-ubyte names).
Batch load_idx_spec(const std::string& spec);

}  // namespace dpclip::data
