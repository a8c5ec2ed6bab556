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

#include "redp/ad/checkpoint.hpp"
#include "redp/ad/optim.hpp"
#include "redp/ad/tape.hpp"
#include "redp/error.hpp"
#include "redp/rng.hpp"

using namespace redp;
using namespace redp::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  for (auto& x : t.data) x = rng.uniform(-1.0, 1.0);
  return t;
}

double vec_dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Every primitive reduced to a scalar through a fixed random projection.
GradCheckResult check_primitive(const std::function<Var(Tape&, Var, Var)>& fn, Shape a_shape,
                                Shape b_shape, std::uint64_t seed = 1) {
  Rng rng(seed);
  ParameterStore ps;
  ps.add("a", random_tensor(a_shape, rng));
  ps.add("b", random_tensor(b_shape, rng));
  Tensor probe;
  bool have_probe = false;
  LossBuilder build = [&](Tape& tape, ParameterStore& p) {
    Var out = fn(tape, tape.param(p, 0), tape.param(p, 1));
    if (!have_probe) {
      Rng r(99);
      probe = random_tensor(tape.shape(out), r);
      have_probe = true;
    }
    return tape.reduce_sum(tape.mul(out, tape.constant(probe)));
  };
  return grad_check(ps, build, 1e-3, 0, 0, Stencil::kFourPoint);
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("forward values") {
  Tape tape;
  auto sm = tape.value(tape.softmax(tape.vector(std::vector<double>{0, 0, 0})));
  for (double p : sm.data) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  std::vector<double> v = {0.3, -1.2, 2.0};
  CHECK(tape.item(tape.cosine_similarity(tape.vector(v), tape.vector(v))) ==
        doctest::Approx(1.0).epsilon(1e-15));

  auto shifted = tape.value(tape.conv1d(tape.vector(std::vector<double>{0, 1, 0}),
                                        tape.vector(std::vector<double>{0, 0, 1})));
  CHECK(shifted.data == std::vector<double>{0, 0, 1});

  auto masked = tape.value(tape.softmax(tape.vector(std::vector<double>{1, 5, 2}),
                                        std::vector<std::uint8_t>{1, 0, 1}));
  CHECK(masked.data[1] == 0.0);
  CHECK(masked.data[0] + masked.data[2] == doctest::Approx(1.0));
}

TEST_CASE("gradient basics") {
  ParameterStore ps;
  ps.add("w", Tensor::vector({0.5, -1.0, 2.0}));
  ps.add("u", Tensor::vector({1.0, 1.0}));
  Tape tape;
  Var loss = tape.reduce_sum(tape.param(ps, 0));
  tape.backward(loss);
  CHECK(ps.at(0).grad == std::vector<double>{1, 1, 1});
  CHECK(ps.at(1).grad == std::vector<double>{0, 0});

  // At w = c the gradient of cos(w, c) is orthogonal to w.
  ps.zero_grad();
  Tape t2;
  Var c = t2.vector(std::vector<double>{0.5, -1.0, 2.0});
  t2.backward(t2.cosine_similarity(t2.param(ps, 0), c));
  CHECK(std::abs(vec_dot(ps.at(0).grad, ps.at(0).value.data)) < 1e-12);
  const std::vector<double> w0 = ps.at(0).value.data;
  for (std::size_t i = 0; i < w0.size(); ++i) {
    auto at = [&](double delta) {
      std::vector<double> w = w0;
      w[i] += delta;
      Tape t;
      return t.item(t.cosine_similarity(t.vector(w), t.vector(w0)));
    };
    const double fd = (at(1e-5) - at(-1e-5)) / 2e-5;
    CHECK(std::abs(fd - ps.at(0).grad[i]) < 1e-8);
  }
}

TEST_CASE("non-scalar loss and unknown primitive") {
  Tape tape;
  Var v = tape.vector(std::vector<double>{1, 2});
  try {
    tape.backward(v);
    FAIL("expected NonScalarLoss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNonScalarLoss);
  }
  std::vector<Var> in = {v};
  try {
    tape.apply("frobnicate", in);
    FAIL("expected UnknownPrimitive");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnknownPrimitive);
  }
  CHECK(tape.item(tape.apply("reduce_sum", in)) == 3.0);
}

TEST_CASE("grad check oracles") {
  ParameterStore ps;
  ps.add("w", Tensor::vector({0.3, -0.7, 1.1, 2.5}));
  auto quad = grad_check(ps, [](Tape& t, ParameterStore& p) {
    Var w = t.param(p, 0);
    return t.matmul(w, w);
  }, 1e-5);
  CHECK(quad.max_rel_error < 1e-7);

  auto chain = grad_check(ps, [](Tape& t, ParameterStore& p) {
    Var x = t.param(p, 0);
    for (int i = 0; i < 5; ++i) x = t.tanh(x);
    return t.reduce_sum(x);
  }, 1e-5);
  CHECK(chain.max_rel_error < 1e-6);
}

TEST_CASE("primitive gradients") {
  const double tol = 1e-6;
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.matmul(a, b); }, {3, 4}, {4, 2})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.matmul(a, b); }, {4}, {4, 3})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.matmul(a, b); }, {3, 4}, {4})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.add(a, b); }, {3, 4}, {4})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.sub(a, b); }, {5}, {5})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.mul(a, b); }, {2, 3}, {2, 3})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) {
          std::vector<Var> xs = {a, b};
          return t.concat(xs);
        }, {3}, {2}).max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) {
          std::vector<Var> xs = {a, b};
          return t.concat(xs, 1);
        }, {2, 3}, {2, 2}).max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) {
          std::vector<Var> xs = {a, b, a};
          return t.stack(xs);
        }, {4}, {4}).max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.tanh(t.add(a, b)); }, {5}, {5})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) { return t.sigmoid(a); }, {5}, {1})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) { return t.relu(a); }, {6}, {1})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) { return t.softmax(a); }, {5}, {1})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) {
          return t.softmax(a, std::vector<std::uint8_t>{1, 1, 0, 1});
        }, {4}, {1}).max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) { return t.log(t.exp(t.mul(a, a))); }, {4},
                        {1}).max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) {
          return t.conv1d(t.softmax(a), t.softmax(b));
        }, {5}, {3}).max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) { return t.l2_normalize(a); }, {4}, {1})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.cosine_similarity(a, b); }, {4},
                        {3, 4}).max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) { return t.reduce_mean(a); }, {2, 3}, {1})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) { return t.reduce_sum(a, 1); }, {2, 3}, {1})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) { return t.reduce_max(a); }, {6}, {1})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var b) { return t.scale(b, a); }, {2, 3}, {1})
            .max_rel_error < tol);
  CHECK(check_primitive([](Tape& t, Var a, Var) {
          return t.dropout_with_mask(a, std::vector<double>{2.0, 0.0, 2.0});
        }, {3}, {1}).max_rel_error < tol);
}

TEST_CASE("dropout") {
  Tape tape;
  Rng rng(3);
  Var x = tape.vector(std::vector<double>(1000, 1.0));
  CHECK(tape.value(tape.dropout(x, 0.5, false, rng)).data == std::vector<double>(1000, 1.0));
  auto d = tape.value(tape.dropout(x, 0.5, true, rng)).data;
  double sum = 0;
  for (double v : d) {
    CHECK((v == 0.0 || v == 2.0));
    sum += v;
  }
  CHECK(sum / 1000 == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("adam") {
  ParameterStore ps;
  ps.add("w", Tensor::vector({1.0, -2.0, 3.0}));
  auto state = make_adam(ps, 0.01);
  const auto before = ps.at(0).value.data;
  adam_step(ps, state);
  CHECK(ps.at(0).value.data == before);

  ps.at(0).grad = {0.5, -3.0, 7.0};
  auto fresh = make_adam(ps, 0.01);
  adam_step(ps, fresh);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::abs(ps.at(0).value.data[i] - before[i]) == doctest::Approx(0.01).epsilon(1e-6));

  auto trajectory = [] {
    ParameterStore p;
    p.add("w", Tensor::vector({0.2, 0.4}));
    auto st = make_adam(p, 0.1);
    for (int i = 0; i < 20; ++i) {
      p.zero_grad();
      Tape t;
      Var w = t.param(p, 0);
      t.backward(t.reduce_sum(t.tanh(t.mul(w, w))));
      adam_step(p, st);
    }
    return p.at(0).value.data;
  };
  CHECK(trajectory() == trajectory());
}

TEST_CASE("checkpoint round trip") {
  Rng rng(5);
  Checkpoint ckpt;
  ckpt.kind = "redp";
  ckpt.config = {{"mu_pos", 0.8}};
  ckpt.domain = {{"intents", {"greet"}}};
  ckpt.params.add("a", random_tensor({3, 2}, rng));
  ckpt.params.add("b", random_tensor({4}, rng), false);
  const std::string text = serialize_checkpoint(ckpt);
  Checkpoint back = parse_checkpoint(text);
  CHECK(back.kind == "redp");
  CHECK(back.params == ckpt.params);
  CHECK(serialize_checkpoint(back) == text);
  try {
    parse_checkpoint("{}");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::kSchemaViolation || e.kind() == ErrorKind::kMalformedDocument));
  }
}

}  // TEST_SUITE
