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

#include <cstddef>
#include <string>
#include <vector>

#include "dpclip/conv.hpp"
#include "dpclip/tensor.hpp"

namespace dpclip {

enum class LayerKind { Conv, Linear, ReLU, MaxPool, AvgPool, Flatten };

/// Non-overlapping or strided pooling window over the spatial axes, no padding.
struct PoolGeometry {
  Shape input;  // spatial
  std::size_t channels = 0;
  Shape window;
  Shape stride;
  Shape output;  // floor((in − window)/stride) + 1
};

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  std::string name;
  Shape in_shape;   // per sample
  Shape out_shape;  // per sample
  bool bias = false;
  conv::ConvGeometry conv;  // Conv only
  std::size_t in_features = 0;   // Linear only
  std::size_t out_features = 0;  // Linear only
  PoolGeometry pool;             // MaxPool / AvgPool only

  bool trainable() const { return kind == LayerKind::Conv || kind == LayerKind::Linear; }
  /// T: output positions per sample (1 for linear layers).
  std::size_t positions() const;
  /// D: rows of the weight matrix.
  std::size_t patch_size() const;
  /// p: columns of the weight matrix.
  std::size_t outputs() const;
  /// "conv1d", "conv2d", "conv3d", "linear", "relu", ...
  std::string kind_name() const;
};

struct ArchSpec {
  Shape input;  // (spatial..., channels), or (features) for MLPs
  std::vector<LayerSpec> layers;
  std::size_t classes = 0;

  /// Indices into `layers` of the conv/linear layers, in order.
  std::vector<std::size_t> trainable_layers() const;
};

/// Composes layers over a declared input shape, resolving every geometry as
/// it goes. Trainable layers are named conv<k>/fc<k> with k counting all
/// trainable layers from 1.
class ArchBuilder {
 public:
  explicit ArchBuilder(Shape input);

  /// Empty stride/padding/dilation default to 1/0/1 on every axis.
  ArchBuilder& conv(std::size_t out_channels, Shape kernel, Shape stride = {}, Shape padding = {},
                    Shape dilation = {}, bool bias = true);
  ArchBuilder& linear(std::size_t out_features, bool bias = true);
  ArchBuilder& relu();
  /// Empty stride defaults to the window.
  ArchBuilder& maxpool(Shape window, Shape stride = {});
  ArchBuilder& avgpool(Shape window, Shape stride = {});
  ArchBuilder& flatten();

  const Shape& current_shape() const { return shape_; }
  /// Checks that the network ends in a class-score vector.
  ArchSpec build() const;

 private:
  ArchBuilder& pool(LayerKind kind, Shape window, Shape stride);
  std::string next_trainable_name(const char* prefix);

  ArchSpec arch_;
  Shape shape_;
  std::size_t trainable_count_ = 0;
};

}  // namespace dpclip
