#include "doctest.h"

#include <cmath>
#include <limits>

#include "das/error.hpp"
#include "das/grad_check.hpp"
#include "das/losses.hpp"
#include "das/rng.hpp"

using namespace das;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

Tensor random_distribution_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (double& v : t.row(r)) s += (v = rng.uniform(0.01, 1.0));
    for (double& v : t.row(r)) v /= s;
  }
  return t;
}

Tensor uniform_rows(std::size_t rows, std::size_t cols) {
  return Tensor({rows, cols}, 1.0 / static_cast<double>(cols));
}

Tensor one_hot_rows(std::vector<int> labels, std::size_t cols) {
  Tensor t({labels.size(), cols});
  for (std::size_t r = 0; r < labels.size(); ++r) t.at(r, labels[r]) = 1.0;
  return t;
}

/// KL(p‖q) written out term by term, independent of the library routine.
double kl_oracle(std::vector<double> p, std::vector<double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

}  // namespace

TEST_CASE("source cross-entropy closed forms") {
  const Tensor y = one_hot_rows({0, 2, 1}, 3);
  CHECK(source_cross_entropy(y, y) <= 1e-6);
  CHECK(source_cross_entropy(y, uniform_rows(3, 3)) == doctest::Approx(std::log(3.0)).epsilon(1e-4));
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    CHECK(source_cross_entropy(y, random_distribution_rows(3, 3, rng)) >= 0.0);
  }
}

TEST_CASE("symmetric KL closed forms") {
  const Tensor p = Tensor::vector({0.5, 0.5});
  const Tensor q = Tensor::vector({0.25, 0.75});
  const double oracle = kl_oracle({0.5, 0.5}, {0.25, 0.75}) + kl_oracle({0.25, 0.75}, {0.5, 0.5});
  CHECK(symmetric_kl(p, q) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(symmetric_kl(p, q) == doctest::Approx(0.2747).epsilon(1e-4));
  CHECK(symmetric_kl(p, p) == 0.0);
  CHECK(symmetric_kl(p, q) == symmetric_kl(q, p));
  CHECK_THROWS(symmetric_kl(Tensor::vector({1.0, 0.0}), q));
}

TEST_CASE("feature adaptation loss composes means, normalization and symmetric KL") {
  const Tensor s = Tensor::matrix({{1, 3}});
  const Tensor t = Tensor::matrix({{1, 1}});
  CHECK(feature_adaptation_loss(s, t, 0.0) == doctest::Approx(0.2747).epsilon(1e-4));
  CHECK(feature_adaptation_loss(s, s) == 0.0);

  Rng rng(4);
  const Tensor a = random_tensor({6, 5}, rng, 0, 2);
  const Tensor b = random_tensor({6, 5}, rng, 0, 2);
  Tensor a_perm({6, 5});
  const std::size_t order[] = {3, 0, 5, 1, 4, 2};
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 5; ++c) a_perm.at(r, c) = a.at(order[r], c);
  }
  CHECK(feature_adaptation_loss(a_perm, b) == doctest::Approx(feature_adaptation_loss(a, b)).epsilon(1e-12));
  CHECK(feature_adaptation_loss(a, b) >= 0.0);
}

TEST_CASE("entropy closed forms and bounds") {
  CHECK(entropy_min_loss(one_hot_rows({0, 1, 2}, 3)) <= 1e-6);
  CHECK(entropy_min_loss(uniform_rows(4, 3)) == doctest::Approx(std::log(3.0)).epsilon(1e-4));
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const double g = entropy_min_loss(random_distribution_rows(5, 3, rng));
    CHECK(g >= 0.0);
    CHECK(g <= std::log(3.0) + 1e-12);
  }
}

TEST_CASE("bootstrap loss closed forms") {
  const Tensor z = one_hot_rows({1, 0, 2}, 3);
  CHECK(bootstrap_loss(z, z) <= 1e-6);
  CHECK(bootstrap_loss(z, uniform_rows(3, 3)) == doctest::Approx(std::log(3.0)).epsilon(1e-4));
  CHECK_THROWS(bootstrap_loss(Tensor::matrix({{0.5, 0.5, 0.0}}), uniform_rows(1, 3)));
}

TEST_CASE("bootstrap targets receive no gradient") {
  Tape t;
  const Var logits = t.input(Tensor::matrix({{0.1, 0.5, -0.3}, {1.0, 0.0, 0.2}}));
  const Var targets_var = t.constant(one_hot_rows({2, 0}, 3));
  const Var omega = ops::bootstrap_loss(t, logits, t.value(targets_var));
  t.backward(omega);
  for (double v : t.grad(targets_var).values()) CHECK(v == 0.0);
}

TEST_CASE("ramp-up weight") {
  CHECK(rampup_weight(30, 30, 3.0) == 3.0);
  CHECK(rampup_weight(7, 7, 1.5) == 1.5);
  // As t/t_max → 0 the weight approaches λ3·e⁻⁵.
  CHECK(std::abs(rampup_weight(1, std::numeric_limits<int>::max(), 3.0) - 3.0 * std::exp(-5.0)) <= 1e-9);
  CHECK(3.0 * std::exp(-5.0) == doctest::Approx(0.0202).epsilon(1e-3));
  for (int t = 1; t < 30; ++t) CHECK(rampup_weight(t, 30, 3.0) < rampup_weight(t + 1, 30, 3.0));
  CHECK_THROWS(rampup_weight(0, 30, 3.0));
  CHECK_THROWS(rampup_weight(31, 30, 3.0));
}

TEST_CASE("total loss arithmetic") {
  const LossBreakdown r = total_loss(1, 2, 3, 4, LossWeights{200, 1, 3}, 3.0);
  CHECK(r.total == 416.0);
  CHECK(total_loss(0.7, 5, 6, 7, LossWeights{0, 0, 0}, 0.0).total == 0.7);
  // Linear in each component.
  const LossWeights w{2, 3, 4};
  const double base = total_loss(1, 1, 1, 1, w, 4).total;
  CHECK(total_loss(2, 1, 1, 1, w, 4).total - base == doctest::Approx(1.0));
  CHECK(total_loss(1, 2, 1, 1, w, 4).total - base == doctest::Approx(2.0));
  CHECK(total_loss(1, 1, 2, 1, w, 4).total - base == doctest::Approx(3.0));
  CHECK(total_loss(1, 1, 1, 2, w, 4).total - base == doctest::Approx(4.0));
  try {
    total_loss(1, NAN, 1, 1, w, 4);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find('J') != std::string::npos);
  }
}

TEST_CASE("MMD closed forms") {
  Rng rng(2);
  const Tensor a = random_tensor({4, 3}, rng, -1, 1);
  CHECK(std::abs(mmd_rbf(a, a, 1.0)) <= 1e-12);
  const double oracle = 2.0 - 2.0 * std::exp(-0.5);
  CHECK(mmd_rbf(Tensor::matrix({{0}}), Tensor::matrix({{1}}), 1.0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(0.7869).epsilon(1e-4));
  for (int i = 0; i < 20; ++i) {
    CHECK(mmd_rbf(random_tensor({3, 2}, rng, -1, 1), random_tensor({5, 2}, rng, -1, 1), 0.7) >= -1e-15);
  }
  CHECK_THROWS(mmd_rbf(a, a, 0.0));
}

TEST_CASE("median heuristic bandwidth") {
  // Joint points 0, 1, 3 on a line: pairwise distances 1, 2, 3.
  CHECK(median_heuristic_sigma(Tensor::matrix({{0}, {1}}), Tensor::matrix({{3}})) == 2.0);
  CHECK(median_heuristic_sigma(Tensor::matrix({{1}}), Tensor::matrix({{1}})) == 1.0);
}

TEST_CASE("fused tape losses agree with the probability-level values") {
  Rng rng(17);
  const Tensor logits = random_tensor({4, 3}, rng, -2, 2);
  Tensor probs = logits;
  for (std::size_t r = 0; r < 4; ++r) {
    double m = -INFINITY, s = 0.0;
    for (double v : probs.row(r)) m = std::max(m, v);
    for (double& v : probs.row(r)) s += (v = std::exp(v - m));
    for (double& v : probs.row(r)) v /= s;
  }
  const Tensor y = one_hot_rows({0, 2, 1, 1}, 3);
  Tape t;
  const Var l = t.input(logits);
  CHECK(t.value(ops::softmax_cross_entropy(t, l, y)).item() ==
        doctest::Approx(source_cross_entropy(y, probs)).epsilon(1e-12));
  CHECK(t.value(ops::softmax_entropy(t, l)).item() ==
        doctest::Approx(entropy_min_loss(probs)).epsilon(1e-12));
  CHECK(t.value(ops::bootstrap_loss(t, l, y)).item() ==
        doctest::Approx(bootstrap_loss(y, probs)).epsilon(1e-12));

  const Tensor xs = random_tensor({4, 5}, rng, 0, 1);
  const Tensor xt = random_tensor({3, 5}, rng, 0, 1);
  CHECK(t.value(ops::feature_adaptation(t, t.input(xs), t.input(xt))).item() ==
        doctest::Approx(feature_adaptation_loss(xs, xt)).epsilon(1e-12));
  CHECK(t.value(ops::mmd_rbf(t, t.input(xs), t.input(xt), 0.8)).item() ==
        doctest::Approx(mmd_rbf(xs, xt, 0.8)).epsilon(1e-12));
}

TEST_CASE("every loss passes the finite-difference check on random batches") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor y = one_hot_rows({static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3)),
                                   static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3))},
                                  3);
    const Tensor logits = random_tensor({4, 3}, rng, -2, 2);
    const Tensor xs = random_tensor({4, 6}, rng, 0, 1.5);
    const Tensor xt = random_tensor({5, 6}, rng, 0, 1.5);

    const ScalarFn L = [&](Tape& t, std::span<const Var> p) {
      return ops::softmax_cross_entropy(t, p[0], y);
    };
    const ScalarFn Gamma = [&](Tape& t, std::span<const Var> p) {
      return ops::softmax_entropy(t, p[0]);
    };
    const ScalarFn Omega = [&](Tape& t, std::span<const Var> p) {
      return ops::bootstrap_loss(t, p[0], y);
    };
    const ScalarFn J = [&](Tape& t, std::span<const Var> p) {
      return ops::feature_adaptation(t, p[0], p[1]);
    };
    const ScalarFn MMD = [&](Tape& t, std::span<const Var> p) {
      return ops::mmd_rbf(t, p[0], p[1], 1.3);
    };
    const ScalarFn P = [&](Tape& t, std::span<const Var> p) {
      return ops::symmetric_kl(t, p[0], p[1]);
    };
    CHECK(grad_check(L, {logits}).passed());
    CHECK(grad_check(Gamma, {logits}).passed());
    CHECK(grad_check(Omega, {logits}).passed());
    CHECK(grad_check(J, {xs, xt}).passed());
    CHECK(grad_check(MMD, {xs, xt}).passed());
    CHECK(grad_check(P, {random_tensor({4}, rng, 0.1, 1), random_tensor({4}, rng, 0.1, 1)}).passed());
  }
}

TEST_CASE("distance loss names round-trip") {
  for (DistanceLoss d : {DistanceLoss::kSymmetricKlMeans, DistanceLoss::kMmdRbf}) {
    CHECK(parse_distance_loss(to_string(d)) == d);
  }
  CHECK_THROWS(parse_distance_loss("cosine"));
}
