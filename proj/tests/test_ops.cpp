#include "doctest.h"

#include <cmath>
#include <numeric>

#include "das/error.hpp"
#include "das/grad_check.hpp"
#include "das/ops.hpp"
#include "das/rng.hpp"

using namespace das;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Random weights dotted with the op output turn any tensor op into a scalar
/// whose gradient exercises every output coordinate.
Var project(Tape& t, Var y, const Tensor& weights) {
  const Var w = t.constant(weights);
  const Tensor& yv = t.value(y);
  double s = 0.0;
  for (std::size_t i = 0; i < yv.size(); ++i) s += yv[i] * weights[i];
  return t.record(Tensor::scalar(s), {y, w}, [y, weights](Tape& tp, const Tensor& g) {
    Tensor& gy = tp.grad_accumulator(y);
    for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += g[0] * weights[i];
  });
}

}  // namespace

TEST_CASE("affine examples") {
  Tape t;
  const Var x = t.input(Tensor::vector({3, -1}));
  const Var eye = t.input(Tensor::matrix({{1, 0}, {0, 1}}));
  const Var zero = t.input(Tensor::vector({0, 0}));
  CHECK(t.value(ops::affine(t, x, eye, zero)) == Tensor::vector({3, -1}));

  const Var W = t.input(Tensor::matrix({{1, 2}, {3, 4}}));
  const Var b = t.input(Tensor::vector({0, 1}));
  const Var ones = t.input(Tensor::vector({1, 1}));
  const Var y = ops::affine(t, ones, W, b);
  // Hand computation: [1+2+0, 3+4+1].
  CHECK(t.value(y) == Tensor::vector({3, 8}));
  t.backward(ops::sum(t, y));
  CHECK(t.grad(b) == Tensor::vector({1, 1}));
}

TEST_CASE("affine rejects incompatible shapes") {
  Tape t;
  const Var x = t.input(Tensor::vector({1, 2, 3}));
  const Var W = t.input(Tensor::matrix({{1, 2}, {3, 4}}));
  const Var b = t.input(Tensor::vector({0, 1}));
  CHECK_THROWS_AS(ops::affine(t, x, W, b), ShapeError);
}

TEST_CASE("relu sign cases and zero subgradient") {
  Tape t;
  const Var x = t.input(Tensor::vector({-1, 0, 2}));
  const Var y = ops::relu(t, x);
  CHECK(t.value(y) == Tensor::vector({0, 0, 2}));
  t.backward(ops::sum(t, y));
  CHECK(t.grad(x) == Tensor::vector({0, 0, 1}));

  Tape t2;
  const Var neg = t2.input(Tensor::vector({-3, -0.5}));
  CHECK(t2.value(ops::relu(t2, neg)) == Tensor::vector({0, 0}));
}

TEST_CASE("softmax examples") {
  Tape t;
  CHECK(t.value(ops::softmax(t, t.input(Tensor::vector({0, 0})))) == Tensor::vector({0.5, 0.5}));
  const Tensor p = t.value(ops::softmax(t, t.input(Tensor::vector({1, 2}))));
  // e/(e+e²) and e²/(e+e²).
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + std::exp(2.0))).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.2689).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.7311).epsilon(1e-4));
}

TEST_CASE("softmax is shift invariant and stable for large logits") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({5}, rng, -5, 5);
    const double c = rng.uniform(-100, 100);
    Tensor shifted = x;
    for (double& v : shifted.values()) v += c;
    Tape t;
    const Tensor a = t.value(ops::softmax(t, t.input(x)));
    const Tensor b = t.value(ops::softmax(t, t.input(shifted)));
    for (std::size_t i = 0; i < 5; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
  Tape t;
  const Tensor big = t.value(ops::softmax(t, t.input(Tensor::vector({1000, 1001}))));
  CHECK(big.all_finite());
  CHECK(big[1] == doctest::Approx(0.7311).epsilon(1e-4));
}

TEST_CASE("max over time picks per-column maxima with lowest-row ties") {
  Tape t;
  const ops::Pooled p = ops::max_over_time(t, t.input(Tensor::matrix({{1, 3}, {5, 2}})));
  CHECK(t.value(p.values) == Tensor::vector({5, 3}));
  CHECK(p.argmax == std::vector<std::size_t>{1, 0});

  const ops::Pooled single = ops::max_over_time(t, t.input(Tensor::matrix({{4, -2, 7}})));
  CHECK(t.value(single.values) == Tensor::vector({4, -2, 7}));

  const ops::Pooled tie = ops::max_over_time(t, t.input(Tensor::matrix({{2, 0}, {2, 0}})));
  CHECK(tie.argmax == std::vector<std::size_t>{0, 0});
}

TEST_CASE("max over time routes the gradient to the winning row only") {
  Tape t;
  const Var h = t.input(Tensor::matrix({{1, 3}, {5, 2}}));
  t.backward(ops::sum(t, ops::max_over_time(t, h).values));
  CHECK(t.grad(h) == Tensor::matrix({{0, 1}, {1, 0}}));
}

TEST_CASE("max over time rejects an empty input") {
  Tape t;
  CHECK_THROWS(ops::max_over_time(t, t.input(Tensor({0, 3}))));
}

TEST_CASE("segment max pools each segment independently") {
  Tape t;
  const Var h = t.input(Tensor::matrix({{1, 0}, {4, -1}, {2, 9}, {3, 3}}));
  const std::size_t offsets[] = {0, 2, 4};
  const ops::Pooled p = ops::segment_max_over_time(t, h, offsets);
  CHECK(t.value(p.values) == Tensor::matrix({{4, 0}, {3, 9}}));
}

TEST_CASE("dropout identities") {
  Rng rng(3);
  Tape t;
  const Tensor x = random_tensor({4, 5}, rng);
  CHECK(t.value(ops::dropout(t, t.input(x), 0.5, false, rng)) == x);
  CHECK(t.value(ops::dropout(t, t.input(x), 0.0, true, rng)) == x);
  CHECK_THROWS(ops::dropout(t, t.input(x), 1.0, true, rng));
}

TEST_CASE("inverted dropout preserves the expectation") {
  Rng rng(11);
  Tape t;
  const Tensor ones({10000}, 1.0);
  const Tensor out = t.value(ops::dropout(t, t.input(ones), 0.5, true, rng));
  const double mean = std::accumulate(out.values().begin(), out.values().end(), 0.0) / 10000.0;
  CHECK(mean >= 0.95);
  CHECK(mean <= 1.05);
  for (double v : out.values()) CHECK((v == 0.0 || v == 2.0));
}

TEST_CASE("dropout gradient follows the mask") {
  Rng rng(5);
  Tape t;
  const Var x = t.input(Tensor({50}, 1.0));
  const Var y = ops::dropout(t, x, 0.3, true, rng);
  t.backward(ops::sum(t, y));
  const Tensor& out = t.value(y);
  for (std::size_t i = 0; i < 50; ++i) CHECK(t.grad(x)[i] == doctest::Approx(out[i]));
}

TEST_CASE("l1_normalize examples") {
  Tape t;
  CHECK(t.value(ops::l1_normalize(t, t.input(Tensor::vector({1, 3})), 0.0)) ==
        Tensor::vector({0.25, 0.75}));
  const Tensor u = t.value(ops::l1_normalize(t, t.input(Tensor::vector({0, 0, 0, 0})), 1e-6));
  for (double v : u.values()) CHECK(v == doctest::Approx(0.25));
  CHECK_THROWS_AS(ops::l1_normalize(t, t.input(Tensor::vector({1, -1})), 1e-6),
                  std::invalid_argument);
}

TEST_CASE("l1_normalize output is a distribution for random nonnegative input") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    Tensor v = random_tensor({8}, rng, 0.0, 2.0);
    if (trial % 5 == 0) v[trial % 8] = 0.0;
    const Tensor p = t.value(ops::l1_normalize(t, t.input(v), 1e-6));
    double s = 0.0;
    for (double e : p.values()) {
      CHECK(e > 0.0);
      s += e;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gather_windows concatenates embedding rows and scatters gradients back") {
  Tape t;
  const Var E = t.input(Tensor::matrix({{0, 0}, {1, 2}, {3, 4}}));
  const std::vector<std::vector<std::int32_t>> seqs = {{1, 2, 1}, {2, 2}};
  const ops::Windows w = ops::gather_windows(t, E, seqs, 2);
  CHECK(w.offsets == std::vector<std::size_t>{0, 2, 3});
  CHECK(t.value(w.rows) == Tensor::matrix({{1, 2, 3, 4}, {3, 4, 1, 2}, {3, 4, 3, 4}}));
  t.backward(ops::sum(t, w.rows));
  // Row 1 appears twice, row 2 four times.
  CHECK(t.grad(E) == Tensor::matrix({{0, 0}, {2, 2}, {4, 4}}));
}

TEST_CASE("gather_windows rejects out-of-vocabulary ids") {
  Tape t;
  const Var E = t.input(Tensor::matrix({{0, 0}, {1, 2}}));
  const std::vector<std::vector<std::int32_t>> seqs = {{1, 5}};
  CHECK_THROWS_AS(ops::gather_windows(t, E, seqs, 2), std::out_of_range);
}

TEST_CASE("every differentiable op passes the finite-difference check on random inputs") {
  Rng rng(1234);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor proj3 = random_tensor({3}, rng);
    const Tensor proj4x3 = random_tensor({4, 3}, rng);
    const Tensor proj4 = random_tensor({4}, rng);

    SUBCASE("affine") {
      const ScalarFn f = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::affine(t, p[0], p[1], p[2]), proj3);
      };
      CHECK(grad_check(f, {random_tensor({2}, rng), random_tensor({3, 2}, rng),
                           random_tensor({3}, rng)})
                .passed());
    }
    SUBCASE("affine_rows") {
      const ScalarFn f = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::affine_rows(t, p[0], p[1], p[2]), proj4x3);
      };
      CHECK(grad_check(f, {random_tensor({4, 2}, rng), random_tensor({3, 2}, rng),
                           random_tensor({3}, rng)})
                .passed());
    }
    SUBCASE("relu away from the kink") {
      Tensor x = random_tensor({4}, rng);
      for (double& v : x.values()) v += v >= 0 ? 0.1 : -0.1;
      const ScalarFn f = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::relu(t, p[0]), proj4);
      };
      CHECK(grad_check(f, {x}).passed());
    }
    SUBCASE("softmax of a vector and of rows") {
      const ScalarFn fv = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::softmax(t, p[0]), proj3);
      };
      CHECK(grad_check(fv, {random_tensor({3}, rng, -3, 3)}).passed());
      const ScalarFn fm = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::softmax(t, p[0]), proj4x3);
      };
      CHECK(grad_check(fm, {random_tensor({4, 3}, rng, -3, 3)}).passed());
    }
    SUBCASE("max over time with distinct entries") {
      const ScalarFn f = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::max_over_time(t, p[0]).values, proj3);
      };
      CHECK(grad_check(f, {random_tensor({5, 3}, rng)}).passed());
    }
    SUBCASE("dropout in eval mode") {
      Rng unused(0);
      const ScalarFn f = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::dropout(t, p[0], 0.5, false, unused), proj4);
      };
      CHECK(grad_check(f, {random_tensor({4}, rng)}).passed());
    }
    SUBCASE("l1_normalize") {
      const ScalarFn f = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::l1_normalize(t, p[0], 1e-6), proj4);
      };
      CHECK(grad_check(f, {random_tensor({4}, rng, 0.1, 2.0)}).passed());
    }
    SUBCASE("mean_rows, sum, sum_squares") {
      const ScalarFn f = [&](Tape& t, std::span<const Var> p) {
        const Var terms[] = {project(t, ops::mean_rows(t, p[0]), proj3), ops::sum(t, p[0]),
                             ops::sum_squares(t, p[0])};
        const double w[] = {1.0, 0.5, -0.25};
        return ops::linear_combination(t, terms, w);
      };
      CHECK(grad_check(f, {random_tensor({4, 3}, rng)}).passed());
    }
    SUBCASE("gather_windows") {
      const std::vector<std::vector<std::int32_t>> seqs = {{0, 1, 2, 3, 0}, {0, 3, 3, 0}};
      const Tensor proj = random_tensor({5, 6}, rng);
      const ScalarFn f = [&](Tape& t, std::span<const Var> p) {
        return project(t, ops::gather_windows(t, p[0], seqs, 3).rows, proj);
      };
      CHECK(grad_check(f, {random_tensor({4, 2}, rng)}).passed());
    }
  }
}
