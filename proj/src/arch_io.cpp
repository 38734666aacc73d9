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

#include "dpclip/arch_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpclip/errors.hpp"

namespace dpclip {
namespace {

using nlohmann::json;

std::string where(std::size_t index, const std::string& field) {
  return "layers[" + std::to_string(index) + "]." + field;
}

std::size_t positive(const json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(field + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

Shape axes(const json& layer, const char* key, std::size_t rank, std::size_t fallback,
           std::size_t index, bool required) {
  const std::string field = where(index, key);
  if (!layer.contains(key)) {
    if (required) throw ParseError(field + ": missing");
    return Shape(rank, fallback);
  }
  const json& v = layer.at(key);
  if (v.is_number()) return Shape(rank, positive(v, field));
  if (!v.is_array() || v.size() != rank) {
    throw ParseError(field + ": expected an integer or an array of " + std::to_string(rank) + " integers");
  }
  Shape out;
  for (const json& e : v) out.push_back(positive(e, field));
  return out;
}

}  // namespace

ArchSpec parse_arch(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("architecture is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("input") || !doc.contains("layers")) {
    throw ParseError("architecture needs 'input' and 'layers'");
  }
  const json& input = doc.at("input");
  Shape in_shape;
  if (input.contains("spatial")) {
    if (!input.at("spatial").is_array()) throw ParseError("input.spatial: expected an array");
    for (const json& e : input.at("spatial")) in_shape.push_back(positive(e, "input.spatial"));
    if (!input.contains("channels")) throw ParseError("input.channels: missing");
    in_shape.push_back(positive(input.at("channels"), "input.channels"));
  } else if (input.contains("features")) {
    in_shape.push_back(positive(input.at("features"), "input.features"));
  } else {
    throw ParseError("input: needs 'spatial' + 'channels' or 'features'");
  }

  ArchBuilder builder(in_shape);
  const json& layers = doc.at("layers");
  if (!layers.is_array() || layers.empty()) throw ParseError("layers: expected a non-empty array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const json& layer = layers[i];
    if (!layer.is_object() || !layer.contains("kind") || !layer.at("kind").is_string()) {
      throw ParseError(where(i, "kind") + ": missing or not a string");
    }
    const std::string kind = layer.at("kind").get<std::string>();
    const std::size_t rank = builder.current_shape().size() - 1;
    try {
      if (kind == "conv1d" || kind == "conv2d" || kind == "conv3d") {
        const std::size_t want = static_cast<std::size_t>(kind[4] - '0');
        if (rank != want) {
          throw ParseError(where(i, "kind") + ": " + kind + " applied to input " +
                           to_string(builder.current_shape()));
        }
        if (layer.contains("groups") && positive(layer.at("groups"), where(i, "groups")) != 1) {
          throw ParseError(where(i, "groups") + ": grouped and depthwise convolutions are not supported");
        }
        if (!layer.contains("out_channels")) throw ParseError(where(i, "out_channels") + ": missing");
        const bool bias = layer.value("bias", true);
        builder.conv(positive(layer.at("out_channels"), where(i, "out_channels")),
                     axes(layer, "kernel", rank, 1, i, true), axes(layer, "stride", rank, 1, i, false),
                     axes(layer, "padding", rank, 0, i, false), axes(layer, "dilation", rank, 1, i, false),
                     bias);
      } else if (kind == "linear") {
        if (!layer.contains("out_features")) throw ParseError(where(i, "out_features") + ": missing");
        builder.linear(positive(layer.at("out_features"), where(i, "out_features")), layer.value("bias", true));
      } else if (kind == "relu") {
        builder.relu();
      } else if (kind == "maxpool" || kind == "avgpool") {
        const Shape window = axes(layer, "window", rank, 1, i, true);
        const Shape stride = axes(layer, "stride", rank, 0, i, false);
        const bool has_stride = layer.contains("stride");
        if (kind == "maxpool") {
          builder.maxpool(window, has_stride ? stride : Shape{});
        } else {
          builder.avgpool(window, has_stride ? stride : Shape{});
        }
      } else if (kind == "flatten") {
        builder.flatten();
      } else {
        throw ParseError(where(i, "kind") + ": unknown layer kind '" + kind + "'");
      }
    } catch (const GeometryError& e) {
      throw GeometryError("layers[" + std::to_string(i) + "] (" + kind + "): " + e.what());
    } catch (const ShapeError& e) {
      throw ParseError("layers[" + std::to_string(i) + "] (" + kind + "): " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("layers[" + std::to_string(i) + "]: " + e.what());
    }
  }
  try {
    return builder.build();
  } catch (const ShapeError& e) {
    throw ParseError(e.what());
  }
}

ArchSpec load_arch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open architecture file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_arch(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace dpclip
