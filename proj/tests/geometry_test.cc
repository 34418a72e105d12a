#include <cmath>
#include <vector>

#include "doctest.h"
#include "sadpt/errors.hpp"
#include "sadpt/geometry.hpp"
#include "sadpt/random.hpp"

using namespace sadpt;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

VectorXd random_vector(Rng& rng, Index n, double lo, double hi) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

VectorXd random_simplex(Rng& rng, Index n) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = standard_exponential(rng);
  return v / v.sum();
}

// Minimizer of 1/2 ||v - z||^2 + lambda ||v||_inf^2 from its optimality
// condition: v = clip(z, t) where t solves 2 lambda t = sum_i (|z_i| - t)_+,
// found by bisection.
VectorXd inf_prox_by_bisection(const VectorXd& z, double lambda) {
  double lo = 0.0, hi = z.cwiseAbs().maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double t = 0.5 * (lo + hi);
    double excess = 0.0;
    for (Index i = 0; i < z.size(); ++i) excess += std::max(std::abs(z[i]) - t, 0.0);
    if (2.0 * lambda * t > excess) hi = t;
    else lo = t;
  }
  const double t = 0.5 * (lo + hi);
  VectorXd v(z.size());
  for (Index i = 0; i < z.size(); ++i) v[i] = std::max(-t, std::min(t, z[i]));
  return v;
}

double inf_objective(const VectorXd& v, const VectorXd& current, const VectorXd& grad,
                     double step, double weight) {
  const double n = v.lpNorm<Eigen::Infinity>();
  return v.dot(grad) + weight * n * n + (v - current).squaredNorm() / (2.0 * step);
}

}  // namespace

TEST_CASE("bregman divergence hand-checked values") {
  const auto euclid = DistanceGenerator::Euclidean(VectorXd::Zero(2));
  CHECK(bregman_divergence(euclid, vec({3, -1}), vec({3, -1})) == 0.0);
  CHECK(bregman_divergence(euclid, vec({1, 0}), vec({0, 0})) == doctest::Approx(0.5));

  const auto entropy = DistanceGenerator::NegativeEntropy(2);
  CHECK(bregman_divergence(entropy, vec({0.5, 0.5}), vec({0.5, 0.5})) ==
        doctest::Approx(0.0));
}

TEST_CASE("entropy divergence is relative entropy on the simplex") {
  Rng rng(11);
  const auto entropy = DistanceGenerator::NegativeEntropy(5);
  for (int k = 0; k < 200; ++k) {
    const VectorXd p = random_simplex(rng, 5), q = random_simplex(rng, 5);
    double kl = 0.0;
    for (Index i = 0; i < 5; ++i) kl += p[i] * std::log(p[i] / q[i]);
    CHECK(bregman_divergence(entropy, p, q) == doctest::Approx(kl).epsilon(1e-12));
  }
}

TEST_CASE("bregman divergence is nonnegative and vanishes only on the diagonal") {
  Rng rng(12);
  MatrixXd b = MatrixXd::Random(3, 3);
  const auto quad = DistanceGenerator::QuadraticNorm(b * b.transpose() + MatrixXd::Identity(3, 3));
  const auto euclid = DistanceGenerator::Euclidean(VectorXd::Zero(3));
  const auto entropy = DistanceGenerator::NegativeEntropy(3);
  for (int k = 0; k < 500; ++k) {
    const VectorXd p = random_vector(rng, 3, -2, 2), q = random_vector(rng, 3, -2, 2);
    CHECK(bregman_divergence(quad, p, q) > 0.0);
    CHECK(bregman_divergence(euclid, p, q) > 0.0);
    CHECK(bregman_divergence(quad, p, p) == 0.0);
    const VectorXd s = random_simplex(rng, 3), t = random_simplex(rng, 3);
    CHECK(bregman_divergence(entropy, s, t) > 0.0);
    CHECK(bregman_divergence(entropy, s, s) <= 1e-12);
  }
}

TEST_CASE("bregman divergence errors") {
  const auto entropy = DistanceGenerator::NegativeEntropy(2);
  CHECK_THROWS_AS(bregman_divergence(entropy, vec({0.5, 0.5}), vec({1.0, 0.0})), DomainError);
  const auto euclid = DistanceGenerator::Euclidean(VectorXd::Zero(2));
  CHECK_THROWS_AS(bregman_divergence(euclid, vec({1, 2}), vec({1, 2, 3})), DimensionError);
}

TEST_CASE("quadratic norm generator") {
  MatrixXd a(2, 2);
  a << 2, 1, 1, 3;
  const auto d = DistanceGenerator::QuadraticNorm(a);
  CHECK(d.strong_convexity_modulus() ==
        doctest::Approx((5.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-12));
  const VectorXd p = vec({1, -2}), q = vec({0.5, 1});
  const VectorXd diff = p - q;
  CHECK(bregman_divergence(d, p, q) == doctest::Approx(0.5 * diff.dot(a * diff)));

  MatrixXd asym(2, 2);
  asym << 1, 2, 0, 1;
  CHECK_THROWS_AS(DistanceGenerator::QuadraticNorm(asym), ParameterError);
  MatrixXd indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(DistanceGenerator::QuadraticNorm(indefinite), ParameterError);
}

TEST_CASE("dual norms satisfy Hoelder's inequality") {
  Rng rng(13);
  MatrixXd b = MatrixXd::Random(4, 4);
  const MatrixXd w = b * b.transpose() + 0.5 * MatrixXd::Identity(4, 4);
  for (const Norm& n : {Norm::l2(), Norm::l1(), Norm::linf(), Norm::weighted(w)}) {
    const Norm d = n.dual();
    for (int k = 0; k < 200; ++k) {
      const VectorXd u = random_vector(rng, 4, -3, 3), v = random_vector(rng, 4, -3, 3);
      CHECK(std::abs(u.dot(v)) <= n(u) * d(v) * (1.0 + 1e-12));
    }
  }
  CHECK(Norm::l1().dual().tag == NormTag::kLInf);
  CHECK(Norm::linf().dual().tag == NormTag::kL1);
}

TEST_CASE("euclidean composite prox examples") {
  Stabilizer off{0.0, vec({5, 5}), StabilizerNorm::kL2Squared};
  CHECK(prox_euclidean_composite(vec({1, 0}), vec({2, 0}), 0.5, off).isZero());
  Stabilizer on{1.0, vec({0, 0}), StabilizerNorm::kL2Squared};
  CHECK(prox_euclidean_composite(vec({1, 0}), vec({2, 0}), 0.5, on).isZero());
  for (double eta : {0.1, 1.0, 7.0}) {
    Stabilizer at{3.0, vec({2, 2}), StabilizerNorm::kL2Squared};
    CHECK(prox_euclidean_composite(vec({2, 2}), vec({0, 0}), eta, at).isApprox(vec({2, 2})));
  }
  CHECK_THROWS_AS(prox_euclidean_composite(vec({1}), vec({1}), 0.0, off), ParameterError);
  CHECK_THROWS_AS(prox_euclidean_composite(vec({1}), vec({1}), -1.0, off), ParameterError);
}

TEST_CASE("euclidean composite prox matches a dense quadratic solve") {
  Rng rng(14);
  for (int k = 0; k < 1000; ++k) {
    const Index n = 1 + static_cast<Index>(rng() % 6);
    const VectorXd cur = random_vector(rng, n, -5, 5), g = random_vector(rng, n, -5, 5);
    const VectorXd c = random_vector(rng, n, -5, 5);
    const double eta = uniform(rng, 0.01, 3), rho = uniform(rng, 0, 4);
    // Hessian (rho + 1/eta) I, linear term g - rho c - cur/eta.
    const MatrixXd h = (rho + 1.0 / eta) * MatrixXd::Identity(n, n);
    const VectorXd expected = h.ldlt().solve(rho * c + cur / eta - g);
    const VectorXd got =
        prox_euclidean_composite(cur, g, eta, {rho, c, StabilizerNorm::kL2Squared});
    CHECK((got - expected).lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, expected.norm()));
  }
}

TEST_CASE("kl simplex prox examples") {
  const VectorXd p = vec({0.2, 0.3, 0.5});
  CHECK(prox_kl_simplex(p, VectorXd::Zero(3), 0.7).isApprox(p, 1e-15));
  CHECK(prox_kl_simplex(p, VectorXd::Constant(3, 4.2), 0.7).isApprox(p, 1e-15));
  const VectorXd q = prox_kl_simplex(vec({0.5, 0.5}), vec({std::log(2.0), 0.0}), 1.0);
  CHECK(q[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(prox_kl_simplex(vec({1.0, 0.0}), vec({0, 0}), 1.0), DomainError);
  CHECK_THROWS_AS(prox_kl_simplex(p, VectorXd::Zero(3), 0.0), ParameterError);
}

TEST_CASE("kl simplex prox stays strictly inside the simplex") {
  Rng rng(15);
  for (int k = 0; k < 1000; ++k) {
    const Index n = 2 + static_cast<Index>(rng() % 8);
    const VectorXd cur = random_simplex(rng, n), g = random_vector(rng, n, -10, 10);
    const double eta = uniform(rng, 0.01, 5);
    const VectorXd out = prox_kl_simplex(cur, g, eta);
    CHECK(std::abs(out.sum() - 1.0) <= 1e-12);
    CHECK(out.minCoeff() > 0.0);
    // Ratios follow the exponentiated-gradient rule.
    CHECK(out[0] / out[1] ==
          doctest::Approx(cur[0] / cur[1] * std::exp(-eta * (g[0] - g[1]))).epsilon(1e-10));
  }
}

TEST_CASE("squared inf-norm prox examples") {
  const VectorXd cur = vec({1.5, -2, 0.3}), g = vec({1, 1, -1});
  CHECK(prox_inf_norm_squared_composite(cur, g, 0.4, 0.0).isApprox(cur - 0.4 * g));
  CHECK(prox_inf_norm_squared_composite(vec({1}), vec({0}), 1.0, 1.0)[0] ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(prox_inf_norm_squared_composite(VectorXd::Zero(3), VectorXd::Zero(3), 2.0, 5.0).isZero());
  CHECK_THROWS_AS(prox_inf_norm_squared_composite(cur, g, 0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(prox_inf_norm_squared_composite(cur, g, 1.0, -1.0), ParameterError);
}

TEST_CASE("squared inf-norm prox agrees with the optimality-condition oracle") {
  Rng rng(16);
  for (int dim = 1; dim <= 5; ++dim) {
    for (int k = 0; k < 100; ++k) {
      const VectorXd cur = random_vector(rng, dim, -4, 4), g = random_vector(rng, dim, -4, 4);
      const double eta = uniform(rng, 0.05, 2), w = uniform(rng, 0, 3);
      const VectorXd got = prox_inf_norm_squared_composite(cur, g, eta, w);
      const VectorXd oracle = inf_prox_by_bisection(cur - eta * g, eta * w);
      CHECK((got - oracle).lpNorm<Eigen::Infinity>() <= 1e-9);
      const double f0 = inf_objective(got, cur, g, eta, w);
      for (int j = 0; j < 20; ++j) {
        const VectorXd d = random_vector(rng, dim, -1, 1) * std::pow(10.0, uniform(rng, -6, 0));
        CHECK(inf_objective(got + d, cur, g, eta, w) >= f0 - 1e-12 * std::max(1.0, std::abs(f0)));
      }
    }
  }
}

TEST_CASE("squared l1-norm prox satisfies its soft-threshold condition") {
  Rng rng(17);
  for (int k = 0; k < 500; ++k) {
    const Index n = 1 + static_cast<Index>(rng() % 7);
    const VectorXd z = random_vector(rng, n, -3, 3);
    const double w = uniform(rng, 0.01, 2);
    const VectorXd out = prox_l1_squared(z, w);
    // Minimizer of 1/2||x - z||^2 + w||x||_1^2 soft-thresholds at 2 w ||x||_1.
    const double theta = 2.0 * w * out.lpNorm<1>();
    for (Index i = 0; i < n; ++i) {
      const double expected = (z[i] < 0 ? -1.0 : 1.0) * std::max(std::abs(z[i]) - theta, 0.0);
      CHECK(out[i] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("composite step dispatch") {
  Rng rng(18);
  const VectorXd cur = random_vector(rng, 3, -1, 1), g = random_vector(rng, 3, -1, 1);
  const VectorXd c = random_vector(rng, 3, -1, 1);
  const auto euclid = DistanceGenerator::Euclidean(VectorXd::Zero(3));

  const Stabilizer l2{0.7, c, StabilizerNorm::kL2Squared};
  CHECK(composite_step(euclid, l2, cur, g, 0.3) == prox_euclidean_composite(cur, g, 0.3, l2));

  // Euclidean + squared inf-norm: the result minimizes the full objective.
  const Stabilizer linf{0.7, c, StabilizerNorm::kLInfSquared};
  const VectorXd x = composite_step(euclid, linf, cur, g, 0.3);
  const auto objective = [&](const VectorXd& v) {
    return v.dot(g) + linf.value(v) + (v - cur).squaredNorm() / 0.6;
  };
  for (int j = 0; j < 1000; ++j) {
    const VectorXd d = random_vector(rng, 3, -1, 1) * std::pow(10.0, uniform(rng, -6, 0));
    CHECK(objective(x + d) >= objective(x) - 1e-13);
  }

  MatrixXd a(3, 3);
  a << 2, 0.5, 0, 0.5, 1, 0.2, 0, 0.2, 3;
  const auto quad = DistanceGenerator::QuadraticNorm(a);
  const VectorXd y = composite_step(quad, l2, cur, g, 0.3);
  // Gradient of <x,g> + rho/2||x-c||^2 + (1/step) D_A(x, cur) vanishes.
  const VectorXd grad = g + 0.7 * (y - c) + a * (y - cur) / 0.3;
  CHECK(grad.norm() <= 1e-12);

  const auto entropy = DistanceGenerator::NegativeEntropy(3);
  const VectorXd p = vec({0.2, 0.3, 0.5});
  const Stabilizer none{0.0, VectorXd(), StabilizerNorm::kL2Squared};
  CHECK(composite_step(entropy, none, p, g, 0.3) == prox_kl_simplex(p, g, 0.3));
  CHECK_THROWS_AS(composite_step(entropy, l2, p, g, 0.3), ConfigurationError);
  CHECK_THROWS_AS(composite_step(quad, linf, cur, g, 0.3), ConfigurationError);
}

TEST_CASE("stabilizer value") {
  const Stabilizer s{2.0, vec({1, 1}), StabilizerNorm::kLInfSquared};
  CHECK(s.value(vec({1, 1})) == 0.0);
  CHECK(s.value(vec({4, 0})) == doctest::Approx(9.0));
  const Stabilizer e{2.0, vec({1, 1}), StabilizerNorm::kL2Squared};
  CHECK(e.value(vec({4, 0})) == doctest::Approx(10.0));
}

TEST_CASE("strong convexity checks") {
  Rng rng(19);
  std::vector<std::pair<VectorXd, VectorXd>> pairs;
  for (int k = 0; k < 50; ++k) pairs.emplace_back(random_vector(rng, 3, -2, 2), random_vector(rng, 3, -2, 2));
  const auto euclid = DistanceGenerator::Euclidean(VectorXd::Zero(3));
  CHECK(check_strong_convexity(euclid, Norm::l2(), 1.0, pairs).holds);

  std::vector<std::pair<VectorXd, VectorXd>> simplex_pairs;
  for (int k = 0; k < 1000; ++k) simplex_pairs.emplace_back(random_simplex(rng, 4), random_simplex(rng, 4));
  const auto report =
      check_strong_convexity(DistanceGenerator::NegativeEntropy(4), Norm::l1(), 1.0, simplex_pairs);
  CHECK(report.holds);
  CHECK(report.violations == 0);

  const auto euclid2 = DistanceGenerator::Euclidean(VectorXd::Zero(2));
  std::vector<std::pair<VectorXd, VectorXd>> one{{vec({1, 0}), vec({0, 0})}};
  const auto bad = check_strong_convexity(euclid2, Norm::l2(), 2.0, one);
  CHECK_FALSE(bad.holds);
  CHECK(bad.worst_margin == doctest::Approx(-0.5));
}
