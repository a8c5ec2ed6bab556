// Copyright 2026 The REDP Authors.
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

#ifndef REDP_KERNELS_KERNELS_HPP_
#define REDP_KERNELS_KERNELS_HPP_

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops used by the autodiff core. Each kernel
// has a portable scalar reference and an AVX2/FMA variant; the variant is
// chosen once per process from CPUID and can be forced to scalar with
// REDP_KERNELS=scalar.

namespace redp::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[i] += a[i] * b[i]
  void (*mul_acc)(const double* a, const double* b, double* y, std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();

// Null when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table();

// The table selected for this process.
const KernelTable& active();

bool cpu_has_avx2();

std::string_view isa_name(Isa isa);

}  // namespace redp::kernels

#endif  // REDP_KERNELS_KERNELS_HPP_
