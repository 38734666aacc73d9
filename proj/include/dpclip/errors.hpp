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

#include <stdexcept>
#include <string>

namespace dpclip {

/// Operand shapes do not agree with what the operation requires.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A convolution or pooling geometry yields no valid output position.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An engine call was made out of order (e.g. backward before forward).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite values where finite ones are required.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed architecture, dataset, or configuration input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpclip
