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


#include <doctest.h>

#include <cmath>
#include <vector>

#include "redp/kernels/kernels.hpp"
#include "redp/rng.hpp"

using namespace redp;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernels") {
  const auto& k = kernels::scalar_table();
  std::vector<double> x = {1, 2, 3}, y = {4, 5, 6};
  CHECK(k.dot(x.data(), y.data(), 3) == 32.0);
  CHECK(k.sum(x.data(), 3) == 6.0);
  k.axpy(2.0, x.data(), y.data(), 3);
  CHECK(y == std::vector<double>{6, 9, 12});
  k.mul_acc(x.data(), x.data(), y.data(), 3);
  CHECK(y == std::vector<double>{7, 13, 21});
}

TEST_CASE("avx2 matches scalar") {
  const auto* avx = kernels::avx2_table();
  if (!avx) {
    MESSAGE("AVX2 not available; dispatch uses scalar kernels");
    CHECK(kernels::active().isa == kernels::Isa::kScalar);
    return;
  }
  const auto& ref = kernels::scalar_table();
  Rng rng(11);
  // Lengths cover empty, sub-vector and remainder tails.
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 33u, 257u}) {
    CAPTURE(n);
    auto x = random_vec(rng, n), y = random_vec(rng, n);
    const double scale = 1.0 + std::abs(ref.dot(x.data(), x.data(), n));
    CHECK(std::abs(avx->dot(x.data(), y.data(), n) - ref.dot(x.data(), y.data(), n)) <=
          1e-12 * scale);
    CHECK(std::abs(avx->sum(x.data(), n) - ref.sum(x.data(), n)) <= 1e-12 * scale);
    auto y1 = y, y2 = y;
    ref.axpy(0.37, x.data(), y1.data(), n);
    avx->axpy(0.37, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));
    ref.mul_acc(x.data(), y.data(), y1.data(), n);
    avx->mul_acc(x.data(), y.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));
  }
}

TEST_CASE("dispatch picks a table") {
  const auto& a = kernels::active();
  CHECK((a.isa == kernels::Isa::kScalar || kernels::cpu_has_avx2()));
  CHECK(!kernels::isa_name(a.isa).empty());
}

}  // TEST_SUITE
