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

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace leafrag::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa) noexcept;

/// Instruction sets compiled into this binary and supported by the running
/// CPU; always contains kScalar.
std::vector<Isa> available_isas();

/// Kernel used by dot()/dot_rows(). The best available ISA unless the
/// LEAFRAG_SIMD environment variable names another available one
/// (`scalar`, `avx2`, `neon`).
Isa active_isa();

/// Inner product of two equally sized vectors. Vector variants reassociate
/// the sum, so results agree with the scalar reference to rounding only.
double dot(std::span<const double> a, std::span<const double> b);
double dot_with(Isa isa, std::span<const double> a, std::span<const double> b);

/// out[i] = dot(query, rows[i*dim .. (i+1)*dim)).
void dot_rows(std::span<const double> query, std::span<const double> rows,
              std::span<double> out);
void dot_rows_with(Isa isa, std::span<const double> query, std::span<const double> rows,
                   std::span<double> out);

}  // namespace leafrag::simd
