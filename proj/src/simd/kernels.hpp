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

namespace leafrag::simd::detail {

using DotFn = double (*)(const double* a, const double* b, std::size_t n);

double dot_scalar(const double* a, const double* b, std::size_t n);
#if defined(LEAFRAG_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
#endif
#if defined(LEAFRAG_HAVE_NEON)
double dot_neon(const double* a, const double* b, std::size_t n);
#endif

}  // namespace leafrag::simd::detail
