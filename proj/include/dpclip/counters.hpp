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

namespace dpclip::counters {

/// Process-wide arithmetic and allocation tally.
///
/// `mul_adds` counts scalar multiplies plus scalar adds performed by tensor
/// arithmetic (a matmul of m×n by n×r counts 2·m·n·r). `live_floats` is the
/// number of doubles currently held by tensors; `peak_floats` is its maximum
/// since the last reset.
struct Snapshot {
  std::uint64_t mul_adds = 0;
  std::int64_t live_floats = 0;
  std::int64_t peak_floats = 0;
};

Snapshot snapshot();

/// Zeroes mul_adds and sets peak_floats to the current live_floats.
void reset();

void add_mul_adds(std::uint64_t n);
void on_alloc(std::int64_t floats);
void on_free(std::int64_t floats);

/// Measures the arithmetic and transient memory of a scope relative to the
/// state at construction. Resets the global peak on entry.
class Scope {
 public:
  Scope();
  std::uint64_t mul_adds() const;
  /// Peak live floats above the live count at construction.
  std::int64_t peak_transient() const;
  std::int64_t live_delta() const;

 private:
  std::uint64_t mul_adds_start_;
  std::int64_t live_start_;
};

}  // namespace dpclip::counters
