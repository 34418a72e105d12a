#include "sadpt/problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sadpt/errors.hpp"

namespace sadpt {
namespace {

double operator_norm(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

double draw(const NoiseModel& noise, double amplitude, Rng& rng) {
  return noise.distribution == NoiseDistribution::kRademacher
             ? rademacher(rng, amplitude)
             : uniform(rng, -amplitude, amplitude);
}

void check_amplitude(double a, const char* what) {
  if (!(a >= 0.0) || !std::isfinite(a)) {
    throw ParameterError(std::string(what) + " amplitude must be >= 0");
  }
}

}  // namespace

BilinearGame::BilinearGame(MatrixXd m, VectorXd b, VectorXd c)
    : m_(std::move(m)), b_(std::move(b)), c_(std::move(c)) {
  if (m_.rows() < 1 || m_.cols() < 1) {
    throw DimensionError("bilinear game needs m, n >= 1");
  }
  internal::check_same_size(b_.size(), m_.rows(), "BilinearGame b");
  internal::check_same_size(c_.size(), m_.cols(), "BilinearGame c");
  if (!m_.allFinite() || !b_.allFinite() || !c_.allFinite()) {
    throw DomainError("bilinear game entries must be finite");
  }
}

double BilinearGame::value(const VectorXd& x, const VectorXd& y) const {
  internal::check_same_size(x.size(), dim_x(), "BilinearGame::value x");
  internal::check_same_size(y.size(), dim_y(), "BilinearGame::value y");
  return x.dot(m_ * y) + b_.dot(x) - c_.dot(y);
}

Gradients exact_gradients(const BilinearGame& game, const VectorXd& x,
                          const VectorXd& y) {
  internal::check_same_size(x.size(), game.dim_x(), "exact_gradients x");
  internal::check_same_size(y.size(), game.dim_y(), "exact_gradients y");
  return {game.M() * y + game.b(), game.M().transpose() * x - game.c()};
}

double NoiseModel::entry_variance(double amplitude) const {
  return distribution == NoiseDistribution::kRademacher
             ? amplitude * amplitude
             : amplitude * amplitude / 3.0;
}

void certify_noise_constants(const BilinearGame& game, NoiseModel& noise) {
  const double m = static_cast<double>(game.dim_x());
  const double n = static_cast<double>(game.dim_y());
  noise.L_M = operator_norm(game.M()) + noise.matrix_amplitude * std::sqrt(m * n);
  noise.L_b = game.b().squaredNorm() + m * noise.entry_variance(noise.b_amplitude);
  noise.L_c = game.c().squaredNorm() + n * noise.entry_variance(noise.c_amplitude);
}

BilinearGame random_uniform_game(Index m, Index n, Rng& rng, double lo,
                                 double hi) {
  if (m < 1 || n < 1) throw DimensionError("random_uniform_game needs m, n >= 1");
  MatrixXd mat(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) mat(i, j) = uniform(rng, lo, hi);
  }
  VectorXd b(m), c(n);
  for (Index i = 0; i < m; ++i) b[i] = uniform(rng, lo, hi);
  for (Index j = 0; j < n; ++j) c[j] = uniform(rng, lo, hi);
  return BilinearGame(std::move(mat), std::move(b), std::move(c));
}

NoiseModel NoiseModel::noiseless(const BilinearGame& game) {
  NoiseModel noise;
  certify_noise_constants(game, noise);
  return noise;
}

NoiseModel NoiseModel::entrywise_matrix(const BilinearGame& game,
                                        double amplitude,
                                        NoiseDistribution dist,
                                        double b_amplitude,
                                        double c_amplitude) {
  check_amplitude(amplitude, "matrix");
  check_amplitude(b_amplitude, "b");
  check_amplitude(c_amplitude, "c");
  NoiseModel noise;
  noise.kind = NoiseKind::kEntrywiseBoundedMatrix;
  noise.distribution = dist;
  noise.matrix_amplitude = amplitude;
  noise.b_amplitude = b_amplitude;
  noise.c_amplitude = c_amplitude;
  certify_noise_constants(game, noise);
  return noise;
}

NoiseModel NoiseModel::entrywise_vector(const BilinearGame& game,
                                        double b_amplitude, double c_amplitude,
                                        NoiseDistribution dist) {
  check_amplitude(b_amplitude, "b");
  check_amplitude(c_amplitude, "c");
  NoiseModel noise;
  noise.kind = NoiseKind::kEntrywiseVectorNoise;
  noise.distribution = dist;
  noise.b_amplitude = b_amplitude;
  noise.c_amplitude = c_amplitude;
  certify_noise_constants(game, noise);
  return noise;
}

GradientSample sample_oracle(const BilinearGame& game, const NoiseModel& noise,
                             const VectorXd& x, const VectorXd& y, Rng& rng) {
  Gradients exact = exact_gradients(game, x, y);
  GradientSample out{std::move(exact.g_x), std::move(exact.g_y), 1};
  const Index m = game.dim_x();
  const Index n = game.dim_y();

  if (noise.matrix_amplitude > 0.0) {
    const double a = noise.matrix_amplitude;
    if (noise.shared_matrix) {
      for (Index j = 0; j < n; ++j) {
        double acc_y = 0.0;
        for (Index i = 0; i < m; ++i) {
          const double e = draw(noise, a, rng);
          out.g_x_tilde[i] += e * y[j];
          acc_y += e * x[i];
        }
        out.g_y_tilde[j] += acc_y;
      }
    } else {
      for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) out.g_x_tilde[i] += draw(noise, a, rng) * y[j];
      }
      for (Index j = 0; j < n; ++j) {
        double acc_y = 0.0;
        for (Index i = 0; i < m; ++i) acc_y += draw(noise, a, rng) * x[i];
        out.g_y_tilde[j] += acc_y;
      }
    }
  }
  if (noise.b_amplitude > 0.0) {
    for (Index i = 0; i < m; ++i) out.g_x_tilde[i] += draw(noise, noise.b_amplitude, rng);
  }
  if (noise.c_amplitude > 0.0) {
    for (Index j = 0; j < n; ++j) out.g_y_tilde[j] -= draw(noise, noise.c_amplitude, rng);
  }
  return out;
}

std::optional<SaddlePoint> exact_saddle(const BilinearGame& game) {
  if (game.dim_x() != game.dim_y()) return std::nullopt;
  Eigen::FullPivLU<MatrixXd> lu(game.M());
  if (!lu.isInvertible()) return std::nullopt;
  SaddlePoint s;
  s.y = lu.solve(-game.b());
  s.x = game.M().transpose().fullPivLu().solve(game.c());
  return s;
}

double duality_gap(const BilinearGame& game, const VectorXd& x_bar,
                   const VectorXd& y_bar, const VectorXd& x_star,
                   const VectorXd& y_star) {
  return game.value(x_bar, y_star) - game.value(x_star, y_bar);
}

double restricted_duality_gap(const BilinearGame& game, const VectorXd& x_bar,
                              const VectorXd& y_bar, const VectorXd& x_center,
                              const VectorXd& y_center, double radius) {
  if (!(radius >= 0.0)) throw ParameterError("radius must be >= 0");
  const Gradients at_avg = exact_gradients(game, x_bar, y_bar);
  return duality_gap(game, x_bar, y_bar, x_center, y_center) +
         radius * (at_avg.g_y.norm() + at_avg.g_x.norm());
}

double theorem1_bound(const BilinearGame& game, const NoiseModel& noise,
                      const CogdaSettings& s, const VectorXd& x_star,
                      const VectorXd& y_star) {
  if (!(s.eta_x > 0.0) || !(s.eta_y > 0.0) || s.horizon < 1) {
    throw ParameterError("theorem1_bound needs positive steps and T >= 1");
  }
  const double lm2 = noise.L_M * noise.L_M;
  const auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  if (!close(s.rho_y, 2.0 * s.eta_x * lm2) || !close(s.rho_x, 2.0 * s.eta_y * lm2)) {
    throw ParameterError(
        "theorem1_bound requires rho_y = 2 eta_x L_M^2 and rho_x = 2 eta_y L_M^2");
  }
  internal::check_same_size(s.x_init.size(), game.dim_x(), "theorem1_bound x_1");
  internal::check_same_size(s.y_init.size(), game.dim_y(), "theorem1_bound y_1");

  const double t = static_cast<double>(s.horizon);
  double init_y_term = 0.0;  // E||M_hat^T x_1 - c_hat||^2
  double init_x_term = 0.0;  // E||M_hat y_1 + b_hat||^2
  if (noise.kind == NoiseKind::kNoiseless) {
    const Gradients g = exact_gradients(game, s.x_init, s.y_init);
    init_y_term = g.g_y.squaredNorm();
    init_x_term = g.g_x.squaredNorm();
  } else {
    init_y_term = 2.0 * lm2 * s.x_init.squaredNorm() + 2.0 * noise.L_c;
    init_x_term = 2.0 * lm2 * s.y_init.squaredNorm() + 2.0 * noise.L_b;
  }
  return (1.0 / (2.0 * s.eta_y * t) + s.eta_x * lm2) * (y_star - s.y_init).squaredNorm() +
         (1.0 / (2.0 * s.eta_x * t) + s.eta_y * lm2) * (x_star - s.x_init).squaredNorm() +
         s.eta_y * init_y_term + s.eta_x * init_x_term;
}

SubBilinearProblem SubBilinearProblem::from_bilinear(const BilinearGame& game,
                                                     const NoiseModel& noise,
                                                     const VectorXd& x_init,
                                                     const VectorXd& y_init) {
  internal::check_same_size(x_init.size(), game.dim_x(), "from_bilinear x_1");
  internal::check_same_size(y_init.size(), game.dim_y(), "from_bilinear y_1");
  SubBilinearProblem p;
  p.dim_x = game.dim_x();
  p.dim_y = game.dim_y();
  p.objective = [game](const VectorXd& x, const VectorXd& y) {
    return game.value(x, y);
  };
  p.oracle = [game, noise](const VectorXd& x, const VectorXd& y, Rng& rng) {
    return sample_oracle(game, noise, x, y, rng);
  };

  const double op = operator_norm(game.M());
  p.l = std::sqrt(2.0 * std::max({op * op, game.b().squaredNorm(),
                                  game.c().squaredNorm()}));

  // E||g_x_tilde||^2 <= 2 L_M^2 ||y - y_1||^2 + 2 E||M_hat y_1 + b_hat||^2.
  const double lm2 = noise.L_M * noise.L_M;
  double kx = 0.0;
  double ky = 0.0;
  if (noise.kind == NoiseKind::kNoiseless) {
    const Gradients g = exact_gradients(game, x_init, y_init);
    kx = g.g_x.squaredNorm();
    ky = g.g_y.squaredNorm();
  } else {
    kx = 2.0 * lm2 * y_init.squaredNorm() + 2.0 * noise.L_b;
    ky = 2.0 * lm2 * x_init.squaredNorm() + 2.0 * noise.L_c;
  }
  p.L = std::sqrt(2.0 * std::max({lm2, kx, ky}));
  return p;
}

NoiseConditionReport estimate_noise_condition(
    const SubBilinearProblem& problem, const VectorXd& x_init,
    const VectorXd& y_init, std::span<const SaddlePoint> probes,
    int samples_per_probe, Rng& rng) {
  if (samples_per_probe < 1) throw ParameterError("need >= 1 sample per probe");
  NoiseConditionReport report;
  const double l2 = problem.L * problem.L;
  for (const SaddlePoint& probe : probes) {
    double sx = 0.0;
    double sy = 0.0;
    for (int k = 0; k < samples_per_probe; ++k) {
      const GradientSample g = problem.oracle(probe.x, probe.y, rng);
      sx += g.g_x_tilde.squaredNorm();
      sy += g.g_y_tilde.squaredNorm();
    }
    sx /= samples_per_probe;
    sy /= samples_per_probe;
    report.worst_ratio_x = std::max(
        report.worst_ratio_x, sx / (l2 * ((probe.y - y_init).squaredNorm() + 1.0)));
    report.worst_ratio_y = std::max(
        report.worst_ratio_y, sy / (l2 * ((probe.x - x_init).squaredNorm() + 1.0)));
  }
  return report;
}

}  // namespace sadpt
