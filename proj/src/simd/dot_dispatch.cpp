// Copyright 2026 The leafrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cstdlib>
#include <string>

#include "kernels.hpp"
#include "leafrag/error.hpp"
#include "leafrag/simd/dot.hpp"

namespace leafrag::simd {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(LEAFRAG_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(LEAFRAG_HAVE_NEON)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

detail::DotFn kernel_for(Isa isa) {
  switch (isa) {
#if defined(LEAFRAG_HAVE_AVX2)
    case Isa::kAvx2: return &detail::dot_avx2;
#endif
#if defined(LEAFRAG_HAVE_NEON)
    case Isa::kNeon: return &detail::dot_neon;
#endif
    default: return &detail::dot_scalar;
  }
}

Isa resolve_active() {
  const auto isas = available_isas();
  if (const char* forced = std::getenv("LEAFRAG_SIMD")) {
    for (Isa isa : isas) {
      if (isa_name(isa) == forced) return isa;
    }
  }
  return isas.back();
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kConfig, "dimension mismatch: " + std::to_string(a) + " vs " +
                                        std::to_string(b));
  }
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

Isa active_isa() {
  static const Isa isa = resolve_active();
  return isa;
}

double dot_with(Isa isa, std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size());
  if (!cpu_supports(isa)) isa = Isa::kScalar;
  return kernel_for(isa)(a.data(), b.data(), a.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  return dot_with(active_isa(), a, b);
}

void dot_rows_with(Isa isa, std::span<const double> query, std::span<const double> rows,
                   std::span<double> out) {
  const std::size_t dim = query.size();
  if (dim == 0 ? !rows.empty() : rows.size() != out.size() * dim) {
    throw Error(ErrorCode::kConfig, "row matrix does not match query dimension");
  }
  if (!cpu_supports(isa)) isa = Isa::kScalar;
  const detail::DotFn fn = kernel_for(isa);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = fn(query.data(), rows.data() + i * dim, dim);
  }
}

void dot_rows(std::span<const double> query, std::span<const double> rows,
              std::span<double> out) {
  dot_rows_with(active_isa(), query, rows, out);
}

}  // namespace leafrag::simd
