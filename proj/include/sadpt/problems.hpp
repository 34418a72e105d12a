#pragma once

// Bilinear games f(x, y) = x^T M y + b^T x - c^T y, their stochastic
// first-order oracle with multiplicative matrix noise, exact saddle points and
// duality gaps.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "sadpt/random.hpp"

namespace sadpt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class BilinearGame {
 public:
  /// Throws DimensionError on inconsistent shapes and DomainError on
  /// non-finite entries.
  BilinearGame(MatrixXd m, VectorXd b, VectorXd c);

  const MatrixXd& M() const { return m_; }
  const VectorXd& b() const { return b_; }
  const VectorXd& c() const { return c_; }
  Index dim_x() const { return m_.rows(); }
  Index dim_y() const { return m_.cols(); }

  double value(const VectorXd& x, const VectorXd& y) const;

 private:
  MatrixXd m_;
  VectorXd b_;
  VectorXd c_;
};

struct Gradients {
  VectorXd g_x;
  VectorXd g_y;
};

/// g_x = M y + b, g_y = M^T x - c.
Gradients exact_gradients(const BilinearGame& game, const VectorXd& x,
                          const VectorXd& y);

/// M, b and c with i.i.d. entries uniform on [lo, hi], drawn in that order
/// (M row-major).
BilinearGame random_uniform_game(Index m, Index n, Rng& rng, double lo = -1.0,
                                 double hi = 1.0);

enum class NoiseKind { kNoiseless, kEntrywiseBoundedMatrix, kEntrywiseVectorNoise };
enum class NoiseDistribution { kRademacher, kUniform };

/// Entrywise i.i.d. symmetric perturbations of M, b and c. Each sampled
/// M_hat = M + xi has ||M_hat||_op <= ||M||_op + a sqrt(mn) = L_M, so the
/// second-moment conditions E||M_hat y||^2 <= L_M^2 ||y||^2 hold per sample.
struct NoiseModel {
  NoiseKind kind = NoiseKind::kNoiseless;
  NoiseDistribution distribution = NoiseDistribution::kRademacher;
  double matrix_amplitude = 0.0;
  double b_amplitude = 0.0;
  double c_amplitude = 0.0;
  double L_M = 0.0;
  double L_b = 0.0;  // >= E||b_hat||^2
  double L_c = 0.0;  // >= E||c_hat||^2
  /// One M_hat per round for both players. false draws an independent
  /// M_hat for the y-gradient.
  bool shared_matrix = true;

  static NoiseModel noiseless(const BilinearGame& game);
  static NoiseModel entrywise_matrix(const BilinearGame& game, double amplitude,
                                     NoiseDistribution dist,
                                     double b_amplitude = 0.0,
                                     double c_amplitude = 0.0);
  static NoiseModel entrywise_vector(const BilinearGame& game,
                                     double b_amplitude, double c_amplitude,
                                     NoiseDistribution dist);

  /// Per-entry variance for amplitude a under `distribution`.
  double entry_variance(double amplitude) const;
};

/// Certified constants for the given amplitudes.
void certify_noise_constants(const BilinearGame& game, NoiseModel& noise);

struct GradientSample {
  VectorXd g_x_tilde;
  VectorXd g_y_tilde;
  std::int64_t queries_used = 0;
};

/// g_x_tilde = M_hat y + b_hat, g_y_tilde = M_hat^T x - c_hat.
GradientSample sample_oracle(const BilinearGame& game, const NoiseModel& noise,
                             const VectorXd& x, const VectorXd& y, Rng& rng);

struct SaddlePoint {
  VectorXd x;
  VectorXd y;
};

/// The unique point where both exact gradients vanish, or nullopt when M is
/// not square and invertible.
std::optional<SaddlePoint> exact_saddle(const BilinearGame& game);

/// f(x_bar, y_star) - f(x_star, y_bar), evaluated without noise.
double duality_gap(const BilinearGame& game, const VectorXd& x_bar,
                   const VectorXd& y_bar, const VectorXd& x_star,
                   const VectorXd& y_star);

/// sup over comparators within `radius` (Euclidean) of (x_center, y_center):
///   max_{y} f(x_bar, y) - min_{x} f(x, y_bar)
/// = f(x_bar, y_c) - f(x_c, y_bar) + radius (||M^T x_bar - c|| + ||M y_bar + b||).
/// Unlike the gap at a saddle point, this stays informative for
/// unconstrained bilinear games.
double restricted_duality_gap(const BilinearGame& game, const VectorXd& x_bar,
                              const VectorXd& y_bar, const VectorXd& x_center,
                              const VectorXd& y_center, double radius);

struct CogdaSettings {
  double eta_x = 0.0;
  double eta_y = 0.0;
  double rho_x = 0.0;
  double rho_y = 0.0;
  std::int64_t horizon = 1;
  VectorXd x_init;
  VectorXd y_init;
};

/// Right-hand side of the COGDA expected-gap bound against (x_star, y_star):
///   (1/(2 eta_y T) + eta_x L_M^2) ||y* - y_1||^2
/// + (1/(2 eta_x T) + eta_y L_M^2) ||x* - x_1||^2
/// + eta_y E||M_hat^T x_1 - c_hat||^2 + eta_x E||M_hat y_1 + b_hat||^2.
/// Noiseless games use the exact initial gradients; noisy ones bound the
/// expectations by 2 L_M^2 ||x_1||^2 + 2 L_c (resp. L_b). Throws
/// ParameterError unless rho_y = 2 eta_x L_M^2 and rho_x = 2 eta_y L_M^2.
double theorem1_bound(const BilinearGame& game, const NoiseModel& noise,
                      const CogdaSettings& settings, const VectorXd& x_star,
                      const VectorXd& y_star);

enum class DomainKind { kUnconstrained, kSimplex };

/// A convex-concave objective known only through a stochastic subgradient
/// oracle, with its declared sub-bilinearity constant l and noise constant L.
struct SubBilinearProblem {
  std::function<double(const VectorXd&, const VectorXd&)> objective;
  std::function<GradientSample(const VectorXd&, const VectorXd&, Rng&)> oracle;
  double l = 0.0;
  double L = 0.0;
  Index dim_x = 0;
  Index dim_y = 0;
  DomainKind domain_x = DomainKind::kUnconstrained;
  DomainKind domain_y = DomainKind::kUnconstrained;

  /// Wraps a bilinear game. L is chosen so that
  ///   E||g_x_tilde||^2 <= L^2 (||y - y_1||^2 + 1) and symmetrically for g_y.
  static SubBilinearProblem from_bilinear(const BilinearGame& game,
                                          const NoiseModel& noise,
                                          const VectorXd& x_init,
                                          const VectorXd& y_init);
};

struct NoiseConditionReport {
  /// max over probes of E||g_x_tilde||^2 / (L^2 (||y - y_1||^2 + 1)),
  /// and the same for y. Values <= 1 mean the declared L is consistent.
  double worst_ratio_x = 0.0;
  double worst_ratio_y = 0.0;
};

/// Monte Carlo estimate of the noise-condition ratios at the given probes.
NoiseConditionReport estimate_noise_condition(
    const SubBilinearProblem& problem, const VectorXd& x_init,
    const VectorXd& y_init, std::span<const SaddlePoint> probes,
    int samples_per_probe, Rng& rng);

}  // namespace sadpt
