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

#include "dpclip/counters.hpp"

#include <atomic>

namespace dpclip::counters {
namespace {

std::atomic<std::uint64_t> g_mul_adds{0};
std::atomic<std::int64_t> g_live{0};
std::atomic<std::int64_t> g_peak{0};

void raise_peak(std::int64_t candidate) {
  std::int64_t peak = g_peak.load(std::memory_order_relaxed);
  while (candidate > peak &&
         !g_peak.compare_exchange_weak(peak, candidate, std::memory_order_relaxed)) {
  }
}

}  // namespace

Snapshot snapshot() {
  return {g_mul_adds.load(), g_live.load(), g_peak.load()};
}

void reset() {
  g_mul_adds.store(0);
  g_peak.store(g_live.load());
}

void add_mul_adds(std::uint64_t n) { g_mul_adds.fetch_add(n, std::memory_order_relaxed); }

void on_alloc(std::int64_t floats) {
  const std::int64_t live = g_live.fetch_add(floats, std::memory_order_relaxed) + floats;
  raise_peak(live);
}

void on_free(std::int64_t floats) { g_live.fetch_sub(floats, std::memory_order_relaxed); }

Scope::Scope() {
  reset();
  mul_adds_start_ = g_mul_adds.load();
  live_start_ = g_live.load();
}

std::uint64_t Scope::mul_adds() const { return g_mul_adds.load() - mul_adds_start_; }

std::int64_t Scope::peak_transient() const { return g_peak.load() - live_start_; }

std::int64_t Scope::live_delta() const { return g_live.load() - live_start_; }

}  // namespace dpclip::counters
