#pragma once

// Distance-generating functions, Bregman divergences and the composite
// proximal steps used by the saddle-point solvers. Everything here is a pure
// function of its arguments.

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sadpt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class NormTag { kL2, kL1, kLInf, kANorm };

/// A norm on R^d. kANorm is sqrt(x^T W x) for a symmetric positive-definite
/// weight W; the other tags ignore `weight`.
struct Norm {
  NormTag tag = NormTag::kL2;
  MatrixXd weight;

  static Norm l2() { return {NormTag::kL2, {}}; }
  static Norm l1() { return {NormTag::kL1, {}}; }
  static Norm linf() { return {NormTag::kLInf, {}}; }
  static Norm weighted(MatrixXd w) { return {NormTag::kANorm, std::move(w)}; }

  double operator()(const VectorXd& v) const;
  /// L2 <-> L2, L1 <-> LInf, A-norm <-> inverse-A-norm.
  Norm dual() const;
};

class DistanceGenerator {
 public:
  enum class Kind { kEuclidean, kNegativeEntropy, kQuadraticNorm };

  /// omega(x) = 1/2 ||x - center||_2^2; 1-strongly convex w.r.t. L2.
  static DistanceGenerator Euclidean(VectorXd center);
  /// omega(x) = sum x_i log x_i on the positive orthant; 1-strongly convex
  /// w.r.t. L1 on the simplex.
  static DistanceGenerator NegativeEntropy(Index dimension);
  /// omega(x) = 1/2 x^T A x; strong convexity modulus lambda_min(A) w.r.t. L2.
  /// Throws ParameterError unless A is symmetric positive definite.
  static DistanceGenerator QuadraticNorm(MatrixXd a);

  Kind kind() const { return kind_; }
  Index dimension() const { return dimension_; }
  double strong_convexity_modulus() const { return modulus_; }
  /// The norm the modulus refers to.
  const Norm& norm() const { return norm_; }
  const VectorXd& center() const { return center_; }
  const MatrixXd& matrix() const { return matrix_; }

  double value(const VectorXd& x) const;

 private:
  DistanceGenerator() = default;

  Kind kind_ = Kind::kEuclidean;
  Index dimension_ = 0;
  double modulus_ = 1.0;
  Norm norm_;
  VectorXd center_;
  MatrixXd matrix_;
};

enum class StabilizerNorm { kL2Squared, kLInfSquared };

/// weight * 1/2 * ||x - center||^2 in the chosen norm. Nonnegative, convex,
/// and zero at the center.
struct Stabilizer {
  double weight = 0.0;
  VectorXd center;
  StabilizerNorm norm = StabilizerNorm::kL2Squared;

  double value(const VectorXd& x) const;
};

/// D(p || q) = omega(p) - omega(q) - <grad omega(q), p - q>.
/// For NegativeEntropy this is sum p log(p/q) - p + q, i.e. KL on the simplex;
/// q must be strictly positive and p nonnegative.
double bregman_divergence(const DistanceGenerator& dgf, const VectorXd& p,
                          const VectorXd& q);

/// argmin_x <x, grad> + rho/2 ||x - c||^2 + 1/(2 step) ||x - current||^2,
/// which is (current - step*grad + rho*step*c) / (1 + rho*step).
VectorXd prox_euclidean_composite(const VectorXd& current,
                                  const VectorXd& grad, double step,
                                  const Stabilizer& stab);

/// Exponentiated-gradient step on the simplex:
/// out_i proportional to current_i * exp(-step * grad_i).
VectorXd prox_kl_simplex(const VectorXd& current, const VectorXd& grad,
                         double step);

/// argmin_w 1/2 ||w - z||^2 + weight * ||w||_1^2 (exact, sort based).
VectorXd prox_l1_squared(const VectorXd& z, double weight);

/// argmin_v 1/2 ||v - z||^2 + weight * ||v||_inf^2, through the Moreau
/// identity with the conjugate (1/(4 weight)) ||.||_1^2.
VectorXd prox_inf_norm_squared(const VectorXd& z, double weight);

/// argmin_v <v, grad> + weight ||v||_inf^2 + 1/(2 step) ||v - current||^2.
VectorXd prox_inf_norm_squared_composite(const VectorXd& current,
                                         const VectorXd& grad, double step,
                                         double weight);

/// One composite mirror step
///   argmin_x <x, grad> + H(x) + (1/step) D(x || current)
/// for the (generator, stabilizer) pairs that have an exact solver:
///   Euclidean + L2Squared, Euclidean + LInfSquared,
///   QuadraticNorm + L2Squared, NegativeEntropy with zero stabilizer weight.
/// Anything else throws ConfigurationError.
VectorXd composite_step(const DistanceGenerator& dgf, const Stabilizer& stab,
                        const VectorXd& current, const VectorXd& grad,
                        double step);

struct StrongConvexityReport {
  bool holds = true;
  std::size_t violations = 0;
  /// min over pairs of D(p||q) - gamma/2 ||p - q||^2.
  double worst_margin = 0.0;
};

/// Checks D(p || q) >= gamma/2 ||p - q||^2 on every pair, with 1e-10 slack.
StrongConvexityReport check_strong_convexity(
    const DistanceGenerator& dgf, const Norm& norm, double gamma,
    std::span<const std::pair<VectorXd, VectorXd>> pairs);

}  // namespace sadpt
