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

#include "dpclip/arch.hpp"

#include "dpclip/errors.hpp"

namespace dpclip {

std::size_t LayerSpec::positions() const {
  switch (kind) {
    case LayerKind::Conv:
      return conv.positions;
    case LayerKind::Linear:
      return 1;
    default:
      return 0;
  }
}

std::size_t LayerSpec::patch_size() const {
  switch (kind) {
    case LayerKind::Conv:
      return conv.patch_size;
    case LayerKind::Linear:
      return in_features;
    default:
      return 0;
  }
}

std::size_t LayerSpec::outputs() const {
  switch (kind) {
    case LayerKind::Conv:
      return conv.out_channels;
    case LayerKind::Linear:
      return out_features;
    default:
      return 0;
  }
}

std::string LayerSpec::kind_name() const {
  switch (kind) {
    case LayerKind::Conv:
      return "conv" + std::to_string(conv.spatial_rank()) + "d";
    case LayerKind::Linear:
      return "linear";
    case LayerKind::ReLU:
      return "relu";
    case LayerKind::MaxPool:
      return "maxpool";
    case LayerKind::AvgPool:
      return "avgpool";
    case LayerKind::Flatten:
      return "flatten";
  }
  return "unknown";
}

std::vector<std::size_t> ArchSpec::trainable_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].trainable()) out.push_back(i);
  return out;
}

ArchBuilder::ArchBuilder(Shape input) : shape_(std::move(input)) {
  if (shape_.empty()) throw ShapeError("architecture input shape is empty");
  for (std::size_t v : shape_)
    if (v == 0) throw ShapeError("architecture input has a zero dimension");
  arch_.input = shape_;
}

std::string ArchBuilder::next_trainable_name(const char* prefix) {
  return std::string(prefix) + std::to_string(++trainable_count_);
}

ArchBuilder& ArchBuilder::conv(std::size_t out_channels, Shape kernel, Shape stride, Shape padding,
                               Shape dilation, bool bias) {
  if (shape_.size() < 2 || shape_.size() > 4) {
    throw ShapeError("conv layer needs a (spatial..., channels) input, got " + to_string(shape_));
  }
  const std::size_t rank = shape_.size() - 1;
  if (stride.empty()) stride.assign(rank, 1);
  if (padding.empty()) padding.assign(rank, 0);
  if (dilation.empty()) dilation.assign(rank, 1);
  const std::string name = next_trainable_name("conv");
  LayerSpec layer;
  layer.kind = LayerKind::Conv;
  layer.name = name;
  layer.in_shape = shape_;
  layer.bias = bias;
  try {
    layer.conv = conv::ConvGeometry::make(shape_.back(), out_channels,
                                          Shape(shape_.begin(), shape_.end() - 1), std::move(kernel),
                                          std::move(stride), std::move(padding), std::move(dilation));
  } catch (const GeometryError& e) {
    throw GeometryError(name + ": " + e.what());
  }
  layer.out_shape = layer.conv.output_shape();
  shape_ = layer.out_shape;
  arch_.layers.push_back(std::move(layer));
  return *this;
}

ArchBuilder& ArchBuilder::linear(std::size_t out_features, bool bias) {
  if (shape_.size() != 1) {
    throw ShapeError("linear layer needs a flat input, got " + to_string(shape_) + " (add flatten)");
  }
  if (out_features < 1) throw ShapeError("linear layer needs at least one output");
  LayerSpec layer;
  layer.kind = LayerKind::Linear;
  layer.name = next_trainable_name("fc");
  layer.in_shape = shape_;
  layer.in_features = shape_[0];
  layer.out_features = out_features;
  layer.bias = bias;
  layer.out_shape = {out_features};
  shape_ = layer.out_shape;
  arch_.layers.push_back(std::move(layer));
  return *this;
}

ArchBuilder& ArchBuilder::relu() {
  LayerSpec layer;
  layer.kind = LayerKind::ReLU;
  layer.name = "relu";
  layer.in_shape = shape_;
  layer.out_shape = shape_;
  arch_.layers.push_back(std::move(layer));
  return *this;
}

ArchBuilder& ArchBuilder::maxpool(Shape window, Shape stride) {
  return pool(LayerKind::MaxPool, std::move(window), std::move(stride));
}

ArchBuilder& ArchBuilder::avgpool(Shape window, Shape stride) {
  return pool(LayerKind::AvgPool, std::move(window), std::move(stride));
}

ArchBuilder& ArchBuilder::pool(LayerKind kind, Shape window, Shape stride) {
  if (shape_.size() < 2) throw ShapeError("pooling needs a (spatial..., channels) input");
  const std::size_t rank = shape_.size() - 1;
  if (stride.empty()) stride = window;
  if (window.size() != rank || stride.size() != rank) {
    throw GeometryError("pool window/stride rank does not match input " + to_string(shape_));
  }
  LayerSpec layer;
  layer.kind = kind;
  layer.name = kind == LayerKind::MaxPool ? "maxpool" : "avgpool";
  layer.in_shape = shape_;
  PoolGeometry& g = layer.pool;
  g.input.assign(shape_.begin(), shape_.end() - 1);
  g.channels = shape_.back();
  g.window = std::move(window);
  g.stride = std::move(stride);
  for (std::size_t j = 0; j < rank; ++j) {
    if (g.window[j] < 1 || g.stride[j] < 1 || g.window[j] > g.input[j]) {
      throw GeometryError(layer.name + ": window " + to_string(g.window) + " does not fit input " +
                          to_string(g.input));
    }
    g.output.push_back((g.input[j] - g.window[j]) / g.stride[j] + 1);
  }
  layer.out_shape = g.output;
  layer.out_shape.push_back(g.channels);
  shape_ = layer.out_shape;
  arch_.layers.push_back(std::move(layer));
  return *this;
}

ArchBuilder& ArchBuilder::flatten() {
  LayerSpec layer;
  layer.kind = LayerKind::Flatten;
  layer.name = "flatten";
  layer.in_shape = shape_;
  layer.out_shape = {numel(shape_)};
  shape_ = layer.out_shape;
  arch_.layers.push_back(std::move(layer));
  return *this;
}

ArchSpec ArchBuilder::build() const {
  if (shape_.size() != 1) {
    throw ShapeError("network must end in a class-score vector, ends in " + to_string(shape_));
  }
  if (arch_.trainable_layers().empty()) throw ShapeError("network has no trainable layer");
  ArchSpec out = arch_;
  out.classes = shape_[0];
  if (out.classes < 2) throw ShapeError("network must produce at least two class scores");
  return out;
}

}  // namespace dpclip
