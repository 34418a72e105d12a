#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "sadpt/errors.hpp"
#include "sadpt/problems.hpp"

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

BilinearGame rotation_game() {
  MatrixXd m(2, 2);
  m << 0, 1, -1, 0;
  return BilinearGame(m, vec({1, 0}), vec({0, 2}));
}

// f(x, y) = x^T M y + b^T x - c^T y written out by hand.
double objective(const BilinearGame& g, const VectorXd& x, const VectorXd& y) {
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    for (Index j = 0; j < y.size(); ++j) s += x[i] * g.M()(i, j) * y[j];
  }
  return s + g.b().dot(x) - g.c().dot(y);
}

// Per-coordinate mean and the 4-sigma acceptance ratio against `exact`.
struct Moments {
  VectorXd sum, sq;
  long n = 0;
  void add(const VectorXd& v) {
    if (n++ == 0) {
      sum = VectorXd::Zero(v.size());
      sq = VectorXd::Zero(v.size());
    }
    sum += v;
    sq += v.cwiseProduct(v);
  }
  bool within_four_sigma(const VectorXd& exact) const {
    const double dn = static_cast<double>(n);
    for (Index i = 0; i < exact.size(); ++i) {
      const double mean = sum[i] / dn;
      const double sd = std::sqrt(std::max(0.0, sq[i] / dn - mean * mean));
      if (std::abs(mean - exact[i]) > 4.0 * sd / std::sqrt(dn) + 1e-12) return false;
    }
    return true;
  }
};

}  // namespace

TEST_CASE("game construction validates shapes and entries") {
  CHECK_THROWS_AS(BilinearGame(MatrixXd::Zero(2, 3), VectorXd::Zero(3), VectorXd::Zero(3)),
                  DimensionError);
  CHECK_THROWS_AS(BilinearGame(MatrixXd::Zero(2, 3), VectorXd::Zero(2), VectorXd::Zero(2)),
                  DimensionError);
  MatrixXd bad = MatrixXd::Zero(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(BilinearGame(bad, VectorXd::Zero(2), VectorXd::Zero(2)), DomainError);
}

TEST_CASE("exact gradients") {
  const BilinearGame id(MatrixXd::Identity(2, 2), VectorXd::Zero(2), VectorXd::Zero(2));
  const Gradients g = exact_gradients(id, vec({1, 2}), vec({3, 4}));
  CHECK(g.g_x == vec({3, 4}));
  CHECK(g.g_y == vec({1, 2}));

  const Gradients r = exact_gradients(rotation_game(), vec({0, 0}), vec({0, 0}));
  CHECK(r.g_x == vec({1, 0}));
  CHECK(r.g_y == vec({0, -2}));
  CHECK_THROWS_AS(exact_gradients(id, vec({1}), vec({1, 2})), DimensionError);
}

TEST_CASE("exact saddle of the rotation game") {
  const auto s = exact_saddle(rotation_game());
  REQUIRE(s.has_value());
  // Independent 2x2 solves by Cramer's rule: M y = -b and M^T x = c.
  const MatrixXd m = rotation_game().M();
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const VectorXd b = vec({1, 0}), c = vec({0, 2});
  const VectorXd y = vec({(-b[0] * m(1, 1) + b[1] * m(0, 1)) / det,
                          (-b[1] * m(0, 0) + b[0] * m(1, 0)) / det});
  const VectorXd x = vec({(c[0] * m(1, 1) - c[1] * m(1, 0)) / det,
                          (c[1] * m(0, 0) - c[0] * m(0, 1)) / det});
  CHECK(s->y.isApprox(y));
  CHECK(s->x.isApprox(x));
  CHECK(s->x.isApprox(vec({2, 0})));
  CHECK(s->y.isApprox(vec({0, -1})));
  const Gradients g = exact_gradients(rotation_game(), s->x, s->y);
  CHECK(g.g_x.norm() <= 1e-15);
  CHECK(g.g_y.norm() <= 1e-15);
}

TEST_CASE("exact saddle special cases") {
  const BilinearGame id(MatrixXd::Identity(2, 2), VectorXd::Zero(2), VectorXd::Zero(2));
  const auto s = exact_saddle(id);
  REQUIRE(s.has_value());
  CHECK(s->x.isZero());
  CHECK(s->y.isZero());
  CHECK_FALSE(exact_saddle(BilinearGame(MatrixXd::Ones(2, 3), VectorXd::Zero(2),
                                        VectorXd::Zero(3)))
                  .has_value());
  CHECK_FALSE(exact_saddle(BilinearGame(MatrixXd::Ones(2, 2), VectorXd::Ones(2),
                                        VectorXd::Zero(2)))
                  .has_value());
}

TEST_CASE("saddle-point inequalities on random probes") {
  Rng rng(21);
  const BilinearGame game = random_uniform_game(5, 5, rng);
  const auto s = exact_saddle(game);
  REQUIRE(s.has_value());
  const double mid = objective(game, s->x, s->y);
  for (int k = 0; k < 1000; ++k) {
    const VectorXd x = random_vector(rng, 5, -10, 10), y = random_vector(rng, 5, -10, 10);
    CHECK(objective(game, s->x, y) <= mid + 1e-9);
    CHECK(mid <= objective(game, x, s->y) + 1e-9);
  }
}

TEST_CASE("duality gap") {
  const BilinearGame scalar(MatrixXd::Identity(1, 1), VectorXd::Zero(1), VectorXd::Zero(1));
  CHECK(duality_gap(scalar, vec({1}), vec({1}), vec({0}), vec({0})) == 0.0);

  Rng rng(22);
  const BilinearGame game = random_uniform_game(4, 4, rng);
  const auto s = *exact_saddle(game);
  CHECK(std::abs(duality_gap(game, s.x, s.y, s.x, s.y)) <= 1e-12);
  for (int k = 0; k < 200; ++k) {
    const VectorXd x = random_vector(rng, 4, -5, 5), y = random_vector(rng, 4, -5, 5);
    const VectorXd xc = random_vector(rng, 4, -5, 5), yc = random_vector(rng, 4, -5, 5);
    CHECK(duality_gap(game, x, y, s.x, s.y) >= -1e-9);
    CHECK(duality_gap(game, x, y, xc, yc) ==
          doctest::Approx(objective(game, x, yc) - objective(game, xc, y)));
    // Affine in x_bar for fixed y_bar.
    const VectorXd x2 = random_vector(rng, 4, -5, 5);
    const double lam = uniform(rng, -1, 2);
    const double mixed = duality_gap(game, lam * x + (1 - lam) * x2, y, xc, yc);
    const double interp =
        lam * duality_gap(game, x, y, xc, yc) + (1 - lam) * duality_gap(game, x2, y, xc, yc);
    CHECK(mixed == doctest::Approx(interp).epsilon(1e-10).scale(10.0));
  }
}

TEST_CASE("restricted gap is the sup over the comparator balls") {
  Rng rng(23);
  const BilinearGame game = random_uniform_game(3, 3, rng);
  const VectorXd xb = random_vector(rng, 3, -2, 2), yb = random_vector(rng, 3, -2, 2);
  const VectorXd xc = random_vector(rng, 3, -2, 2), yc = random_vector(rng, 3, -2, 2);
  const double r = 0.7;
  const double value = restricted_duality_gap(game, xb, yb, xc, yc, r);
  double best = -1e300;
  for (int k = 0; k < 20000; ++k) {
    VectorXd dx = random_vector(rng, 3, -1, 1), dy = random_vector(rng, 3, -1, 1);
    dx *= r / dx.norm();
    dy *= r / dy.norm();
    const double g = duality_gap(game, xb, yb, xc + dx, yc + dy);
    CHECK(g <= value + 1e-12);
    best = std::max(best, g);
  }
  CHECK(best >= value - 0.05 * std::abs(value));
}

TEST_CASE("noiseless oracle returns exact gradients") {
  Rng rng(24);
  const BilinearGame game = random_uniform_game(3, 4, rng);
  const NoiseModel noise = NoiseModel::noiseless(game);
  const VectorXd x = random_vector(rng, 3, -1, 1), y = random_vector(rng, 4, -1, 1);
  const GradientSample s = sample_oracle(game, noise, x, y, rng);
  const Gradients g = exact_gradients(game, x, y);
  CHECK(s.g_x_tilde == g.g_x);
  CHECK(s.g_y_tilde == g.g_y);
  CHECK(s.queries_used == 1);
}

TEST_CASE("oracle samples are reproducible from the seed") {
  Rng gen(25);
  const BilinearGame game = random_uniform_game(4, 4, gen);
  const NoiseModel noise = NoiseModel::entrywise_matrix(game, 0.2, NoiseDistribution::kRademacher);
  const VectorXd x = random_vector(gen, 4, -1, 1), y = random_vector(gen, 4, -1, 1);
  Rng a(99), b(99);
  const GradientSample s1 = sample_oracle(game, noise, x, y, a);
  const GradientSample s2 = sample_oracle(game, noise, x, y, b);
  CHECK(s1.g_x_tilde == s2.g_x_tilde);
  CHECK(s1.g_y_tilde == s2.g_y_tilde);
}

TEST_CASE("noise constants") {
  Rng gen(26);
  const BilinearGame game = random_uniform_game(3, 5, gen);
  const double op = Eigen::JacobiSVD<MatrixXd>(game.M()).singularValues()[0];
  const NoiseModel rad = NoiseModel::entrywise_matrix(game, 0.1, NoiseDistribution::kRademacher,
                                                      0.2, 0.3);
  CHECK(rad.L_M == doctest::Approx(op + 0.1 * std::sqrt(15.0)));
  CHECK(rad.L_b == doctest::Approx(game.b().squaredNorm() + 3 * 0.04));
  CHECK(rad.L_c == doctest::Approx(game.c().squaredNorm() + 5 * 0.09));
  const NoiseModel uni = NoiseModel::entrywise_vector(game, 0.3, 0.6, NoiseDistribution::kUniform);
  CHECK(uni.L_M == doctest::Approx(op));
  CHECK(uni.L_b == doctest::Approx(game.b().squaredNorm() + 3 * 0.09 / 3));
  CHECK(uni.L_c == doctest::Approx(game.c().squaredNorm() + 5 * 0.36 / 3));
}

TEST_CASE("noisy oracle is unbiased and meets its moment conditions") {
  Rng gen(27);
  const BilinearGame game = random_uniform_game(4, 3, gen);
  const VectorXd x = random_vector(gen, 4, -1, 1), y = random_vector(gen, 3, -1, 1);
  const Gradients exact = exact_gradients(game, x, y);
  for (NoiseDistribution dist : {NoiseDistribution::kRademacher, NoiseDistribution::kUniform}) {
    for (bool shared : {true, false}) {
      NoiseModel noise = NoiseModel::entrywise_matrix(game, 0.3, dist, 0.2, 0.1);
      noise.shared_matrix = shared;
      Moments mx, my;
      double mb = 0.0;
      const long n = 100000;
      Rng rng(shared ? 1 : 2);
      for (long k = 0; k < n; ++k) {
        const GradientSample s = sample_oracle(game, noise, x, y, rng);
        mx.add(s.g_x_tilde);
        my.add(s.g_y_tilde);
        mb += s.g_x_tilde.squaredNorm();
      }
      CHECK(mx.within_four_sigma(exact.g_x));
      CHECK(my.within_four_sigma(exact.g_y));
      // E||M_hat y + b_hat||^2 <= 2 L_M^2 ||y||^2 + 2 L_b.
      CHECK(mb / n <= 2 * noise.L_M * noise.L_M * y.squaredNorm() + 2 * noise.L_b);
    }
  }
}

TEST_CASE("each sampled matrix respects the operator-norm constant") {
  Rng gen(28);
  const BilinearGame game(MatrixXd::Identity(3, 3) * 0.5, VectorXd::Zero(3), VectorXd::Zero(3));
  const NoiseModel noise = NoiseModel::entrywise_matrix(game, 0.4, NoiseDistribution::kUniform);
  Rng rng(5);
  for (int k = 0; k < 2000; ++k) {
    const VectorXd y = random_vector(gen, 3, -1, 1);
    const GradientSample s = sample_oracle(game, noise, VectorXd::Zero(3), y, rng);
    CHECK(s.g_x_tilde.norm() <= noise.L_M * y.norm() + 1e-12);
  }
}

TEST_CASE("shared matrix noise uses one draw for both players") {
  const BilinearGame game(MatrixXd::Zero(2, 2), VectorXd::Zero(2), VectorXd::Zero(2));
  NoiseModel noise = NoiseModel::entrywise_matrix(game, 1.0, NoiseDistribution::kRademacher);
  const VectorXd e0 = vec({1, 0}), e1 = vec({0, 1});
  Rng rng(6);
  // With x = e_0, y = e_1 both estimates read entry (0, 1) of M_hat.
  for (int k = 0; k < 100; ++k) {
    const GradientSample s = sample_oracle(game, noise, e0, e1, rng);
    CHECK(s.g_x_tilde[0] == s.g_y_tilde[1]);
  }
  noise.shared_matrix = false;
  int differ = 0;
  for (int k = 0; k < 100; ++k) {
    const GradientSample s = sample_oracle(game, noise, e0, e1, rng);
    if (s.g_x_tilde[0] != s.g_y_tilde[1]) ++differ;
  }
  CHECK(differ > 20);
}

TEST_CASE("theorem 1 bound") {
  Rng gen(29);
  const BilinearGame game(random_uniform_game(3, 3, gen).M(), VectorXd::Zero(3), VectorXd::Zero(3));
  const NoiseModel noise = NoiseModel::noiseless(game);
  const double lm = noise.L_M;
  CogdaSettings s;
  s.horizon = 400;
  s.eta_x = 0.05;
  s.eta_y = 0.02;
  s.rho_y = 2 * s.eta_x * lm * lm;
  s.rho_x = 2 * s.eta_y * lm * lm;
  s.x_init = VectorXd::Zero(3);
  s.y_init = VectorXd::Zero(3);
  const VectorXd xs = random_vector(gen, 3, -2, 2), ys = random_vector(gen, 3, -2, 2);
  const double expected =
      (1 / (2 * s.eta_y * 400) + s.eta_x * lm * lm) * ys.squaredNorm() +
      (1 / (2 * s.eta_x * 400) + s.eta_y * lm * lm) * xs.squaredNorm();
  CHECK(theorem1_bound(game, noise, s, xs, ys) == doctest::Approx(expected).epsilon(1e-12));

  s.x_init = xs;
  s.y_init = ys;
  // Only the initial-gradient terms remain.
  const Gradients g1 = exact_gradients(game, xs, ys);
  CHECK(theorem1_bound(game, noise, s, xs, ys) ==
        doctest::Approx(s.eta_y * g1.g_y.squaredNorm() + s.eta_x * g1.g_x.squaredNorm()));

  s.rho_x *= 1.01;
  CHECK_THROWS_AS(theorem1_bound(game, noise, s, xs, ys), ParameterError);
}

TEST_CASE("tuned theorem 1 bound stays within its rate expression") {
  Rng gen(30);
  const BilinearGame game = random_uniform_game(5, 5, gen);
  const NoiseModel noise = NoiseModel::entrywise_matrix(game, 0.1, NoiseDistribution::kRademacher,
                                                        0.1, 0.1);
  const auto saddle = *exact_saddle(game);
  const double lm = noise.L_M;
  for (std::int64_t T : {100, 10000, 1000000}) {
    CogdaSettings s;
    s.horizon = T;
    s.eta_x = s.eta_y = 1.0 / (lm * std::sqrt(static_cast<double>(T)));
    s.rho_x = s.rho_y = 2 * s.eta_x * lm * lm;
    s.x_init = VectorXd::Zero(5);
    s.y_init = VectorXd::Zero(5);
    // (L_M^2 (||x*||^2 + ||y*||^2) + L_b + L_c) / (L_M sqrt(T)), where L_b and
    // L_c already bound squared norms.
    const double rate = (lm * lm * (saddle.x.squaredNorm() + saddle.y.squaredNorm()) +
                         noise.L_b + noise.L_c) /
                        (lm * std::sqrt(static_cast<double>(T)));
    const double bound = theorem1_bound(game, noise, s, saddle.x, saddle.y);
    CHECK(bound <= 2.0 * rate);
    const double exact = 1.5 * lm * (saddle.x.squaredNorm() + saddle.y.squaredNorm()) /
                             std::sqrt(static_cast<double>(T)) +
                         2.0 * (noise.L_b + noise.L_c) / (lm * std::sqrt(static_cast<double>(T)));
    CHECK(bound == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("sub-bilinear wrapper declares a consistent noise constant") {
  Rng gen(31);
  const BilinearGame game = random_uniform_game(4, 4, gen);
  const NoiseModel noise = NoiseModel::entrywise_matrix(game, 0.2, NoiseDistribution::kUniform,
                                                        0.1, 0.1);
  const VectorXd x1 = random_vector(gen, 4, -1, 1), y1 = random_vector(gen, 4, -1, 1);
  const SubBilinearProblem p = SubBilinearProblem::from_bilinear(game, noise, x1, y1);
  CHECK(p.dim_x == 4);
  CHECK(p.dim_y == 4);
  CHECK(p.l > 0.0);
  std::vector<SaddlePoint> probes;
  for (int k = 0; k < 20; ++k) {
    probes.push_back({random_vector(gen, 4, -10, 10), random_vector(gen, 4, -10, 10)});
  }
  probes.push_back({x1, y1});
  Rng rng(7);
  const NoiseConditionReport r = estimate_noise_condition(p, x1, y1, probes, 2000, rng);
  CHECK(r.worst_ratio_x <= 1.0);
  CHECK(r.worst_ratio_y <= 1.0);
  CHECK(r.worst_ratio_x > 0.0);

  const VectorXd x = random_vector(gen, 4, -1, 1), y = random_vector(gen, 4, -1, 1);
  CHECK(p.objective(x, y) == doctest::Approx(objective(game, x, y)));
}
