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

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>

#include "dpclip/kernels.hpp"

namespace dpclip::kernels {
namespace {

bool cpu_supports(std::string_view name) {
#if defined(DPCLIP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  if (name == "avx2") {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }
#endif
#if defined(DPCLIP_HAVE_NEON)
  if (name == "neon") return true;  // baseline on aarch64
#endif
  return name == "scalar";
}

const KernelTable* find(std::string_view name) {
  for (const KernelTable* t : available()) {
    if (t->name == name) return t;
  }
  return nullptr;
}

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("DPCLIP_KERNELS")) {
    if (const KernelTable* t = find(env)) return t;
    std::cerr << "dpclip: DPCLIP_KERNELS=" << env << " is not available here, using "
              << available().back()->name << "\n";
  }
  return available().back();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{initial_choice()};
  return current;
}

}  // namespace

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&scalar()};
#if defined(DPCLIP_HAVE_AVX2)
  if (cpu_supports("avx2")) out.push_back(&avx2());
#endif
#if defined(DPCLIP_HAVE_NEON)
  if (cpu_supports("neon")) out.push_back(&neon());
#endif
  return out;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  const KernelTable* t = find(name);
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace dpclip::kernels
