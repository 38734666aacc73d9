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

#include <string>

#include "dpclip/arch.hpp"

namespace dpclip {

/// Reads an architecture document:
///
///   { "input": {"spatial": [32, 32], "channels": 3},
///     "layers": [ {"kind": "conv2d", "out_channels": 8, "kernel": [3, 3],
///                  "stride": [1, 1], "padding": [1, 1], "dilation": [1, 1],
///                  "bias": true},
///                 {"kind": "relu"}, {"kind": "maxpool", "window": [2, 2]},
///                 {"kind": "flatten"}, {"kind": "linear", "out_features": 10} ] }
///
/// Per-axis fields also accept a single integer applied to every axis.
/// Throws ParseError naming the layer and field, or GeometryError naming the
/// layer whose geometry is invalid.
ArchSpec parse_arch(const std::string& text);
ArchSpec load_arch(const std::string& path);

}  // namespace dpclip
