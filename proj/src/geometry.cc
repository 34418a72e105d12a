#include "sadpt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sadpt/errors.hpp"

namespace sadpt {
namespace {

void check_step(double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ParameterError("step size must be positive and finite, got " +
                         std::to_string(step));
  }
}

void check_weight(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw ParameterError("regularization weight must be nonnegative, got " +
                         std::to_string(weight));
  }
}

double sign(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

double Norm::operator()(const VectorXd& v) const {
  switch (tag) {
    case NormTag::kL2:
      return v.norm();
    case NormTag::kL1:
      return v.lpNorm<1>();
    case NormTag::kLInf:
      return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
    case NormTag::kANorm:
      internal::check_same_size(weight.rows(), v.size(), "Norm");
      return std::sqrt(std::max(0.0, v.dot(weight * v)));
  }
  return 0.0;
}

Norm Norm::dual() const {
  switch (tag) {
    case NormTag::kL2:
      return l2();
    case NormTag::kL1:
      return linf();
    case NormTag::kLInf:
      return l1();
    case NormTag::kANorm:
      return weighted(weight.inverse());
  }
  return l2();
}

DistanceGenerator DistanceGenerator::Euclidean(VectorXd center) {
  DistanceGenerator d;
  d.kind_ = Kind::kEuclidean;
  d.dimension_ = center.size();
  d.modulus_ = 1.0;
  d.norm_ = Norm::l2();
  d.center_ = std::move(center);
  return d;
}

DistanceGenerator DistanceGenerator::NegativeEntropy(Index dimension) {
  if (dimension < 1) throw ParameterError("entropy dimension must be >= 1");
  DistanceGenerator d;
  d.kind_ = Kind::kNegativeEntropy;
  d.dimension_ = dimension;
  d.modulus_ = 1.0;
  d.norm_ = Norm::l1();
  return d;
}

DistanceGenerator DistanceGenerator::QuadraticNorm(MatrixXd a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw ParameterError("quadratic-norm matrix must be square and nonempty");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ParameterError("quadratic-norm matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();
  if (!(lambda_min > 0.0)) {
    throw ParameterError("quadratic-norm matrix must be positive definite");
  }
  DistanceGenerator d;
  d.kind_ = Kind::kQuadraticNorm;
  d.dimension_ = a.rows();
  d.modulus_ = lambda_min;
  d.norm_ = Norm::l2();
  d.matrix_ = std::move(a);
  return d;
}

double DistanceGenerator::value(const VectorXd& x) const {
  internal::check_same_size(x.size(), dimension_, "DistanceGenerator::value");
  switch (kind_) {
    case Kind::kEuclidean:
      return 0.5 * (x - center_).squaredNorm();
    case Kind::kNegativeEntropy: {
      double total = 0.0;
      for (Index i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) throw DomainError("negative entropy needs x >= 0");
        if (x[i] > 0.0) total += x[i] * std::log(x[i]);
      }
      return total;
    }
    case Kind::kQuadraticNorm:
      return 0.5 * x.dot(matrix_ * x);
  }
  return 0.0;
}

double Stabilizer::value(const VectorXd& x) const {
  internal::check_same_size(x.size(), center.size(), "Stabilizer::value");
  const VectorXd d = x - center;
  const double n = norm == StabilizerNorm::kL2Squared
                       ? d.squaredNorm()
                       : std::pow(d.size() ? d.lpNorm<Eigen::Infinity>() : 0.0, 2);
  return 0.5 * weight * n;
}

double bregman_divergence(const DistanceGenerator& dgf, const VectorXd& p,
                          const VectorXd& q) {
  internal::check_same_size(p.size(), q.size(), "bregman_divergence");
  internal::check_same_size(p.size(), dgf.dimension(), "bregman_divergence");
  switch (dgf.kind()) {
    case DistanceGenerator::Kind::kEuclidean:
      return 0.5 * (p - q).squaredNorm();
    case DistanceGenerator::Kind::kQuadraticNorm: {
      const VectorXd d = p - q;
      return 0.5 * d.dot(dgf.matrix() * d);
    }
    case DistanceGenerator::Kind::kNegativeEntropy: {
      double total = 0.0;
      for (Index i = 0; i < p.size(); ++i) {
        if (!(q[i] > 0.0)) {
          throw DomainError("entropy divergence needs q strictly positive");
        }
        if (p[i] < 0.0) throw DomainError("entropy divergence needs p >= 0");
        if (p[i] > 0.0) total += p[i] * std::log(p[i] / q[i]);
        total += q[i] - p[i];
      }
      return std::max(0.0, total);
    }
  }
  return 0.0;
}

VectorXd prox_euclidean_composite(const VectorXd& current,
                                  const VectorXd& grad, double step,
                                  const Stabilizer& stab) {
  internal::check_same_size(current.size(), grad.size(),
                            "prox_euclidean_composite");
  check_step(step);
  check_weight(stab.weight);
  if (stab.norm != StabilizerNorm::kL2Squared) {
    throw ParameterError("prox_euclidean_composite needs an L2Squared stabilizer");
  }
  const double shrink = 1.0 + stab.weight * step;
  VectorXd out = (current - step * grad) / shrink;
  if (stab.weight != 0.0) {
    internal::check_same_size(stab.center.size(), current.size(),
                              "prox_euclidean_composite center");
    out += (stab.weight * step / shrink) * stab.center;
  }
  return out;
}

VectorXd prox_kl_simplex(const VectorXd& current, const VectorXd& grad,
                         double step) {
  internal::check_same_size(current.size(), grad.size(), "prox_kl_simplex");
  check_step(step);
  if (current.size() == 0) throw DomainError("prox_kl_simplex on empty vector");
  for (Index i = 0; i < current.size(); ++i) {
    if (!(current[i] > 0.0) || !std::isfinite(current[i])) {
      throw DomainError("prox_kl_simplex needs a strictly positive point");
    }
    if (!std::isfinite(grad[i])) {
      throw DomainError("prox_kl_simplex got a non-finite gradient");
    }
  }
  // Shifting by the smallest entry keeps every exponent <= 0.
  const double g_min = grad.minCoeff();
  VectorXd out(current.size());
  for (Index i = 0; i < current.size(); ++i) {
    out[i] = current[i] * std::exp(-step * (grad[i] - g_min));
  }
  out /= out.sum();
  return out;
}

VectorXd prox_l1_squared(const VectorXd& z, double weight) {
  check_weight(weight);
  if (weight == 0.0) return z;
  const Index n = z.size();
  std::vector<double> mags(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) mags[static_cast<std::size_t>(i)] = std::abs(z[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());

  // The soft threshold theta solves theta = 2 w sum_i (|z_i| - theta)_+.
  // With the k largest magnitudes active, theta_k = 2 w S_k / (1 + 2 w k);
  // the active set is the longest prefix with |z|_(k) > theta_k.
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    const double candidate_prefix = prefix + mags[k];
    const double candidate =
        2.0 * weight * candidate_prefix /
        (1.0 + 2.0 * weight * static_cast<double>(k + 1));
    if (!(mags[k] > candidate)) break;
    prefix = candidate_prefix;
    theta = candidate;
  }
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    out[i] = sign(z[i]) * std::max(std::abs(z[i]) - theta, 0.0);
  }
  return out;
}

VectorXd prox_inf_norm_squared(const VectorXd& z, double weight) {
  check_weight(weight);
  if (weight == 0.0) return z;
  // Moreau: prox_f(z) + prox_{f*}(z) = z with f* = (1/(4 weight)) ||.||_1^2.
  return z - prox_l1_squared(z, 0.25 / weight);
}

VectorXd prox_inf_norm_squared_composite(const VectorXd& current,
                                         const VectorXd& grad, double step,
                                         double weight) {
  internal::check_same_size(current.size(), grad.size(),
                            "prox_inf_norm_squared_composite");
  check_step(step);
  check_weight(weight);
  return prox_inf_norm_squared(current - step * grad, step * weight);
}

VectorXd composite_step(const DistanceGenerator& dgf, const Stabilizer& stab,
                        const VectorXd& current, const VectorXd& grad,
                        double step) {
  internal::check_same_size(current.size(), dgf.dimension(), "composite_step");
  internal::check_same_size(grad.size(), dgf.dimension(), "composite_step");
  check_step(step);
  check_weight(stab.weight);
  using Kind = DistanceGenerator::Kind;
  if (stab.weight != 0.0) {
    internal::check_same_size(stab.center.size(), dgf.dimension(),
                              "composite_step stabilizer center");
  }

  switch (dgf.kind()) {
    case Kind::kEuclidean:
      if (stab.norm == StabilizerNorm::kL2Squared) {
        return prox_euclidean_composite(current, grad, step, stab);
      } else {
        if (stab.weight == 0.0) return current - step * grad;
        const VectorXd shifted = current - stab.center;
        return stab.center + prox_inf_norm_squared_composite(
                                 shifted, grad, step, 0.5 * stab.weight);
      }
    case Kind::kQuadraticNorm: {
      if (stab.norm != StabilizerNorm::kL2Squared) break;
      // First-order condition: (rho I + A / step) x = rho c + A x_t / step - g.
      const MatrixXd& a = dgf.matrix();
      MatrixXd lhs = a / step;
      lhs.diagonal().array() += stab.weight;
      VectorXd rhs = a * current / step - grad;
      if (stab.weight != 0.0) rhs += stab.weight * stab.center;
      return lhs.llt().solve(rhs);
    }
    case Kind::kNegativeEntropy:
      if (stab.weight != 0.0) break;
      return prox_kl_simplex(current, grad, step);
  }
  throw ConfigurationError(
      "no exact composite step for this distance generator and stabilizer");
}

StrongConvexityReport check_strong_convexity(
    const DistanceGenerator& dgf, const Norm& norm, double gamma,
    std::span<const std::pair<VectorXd, VectorXd>> pairs) {
  StrongConvexityReport report;
  bool first = true;
  for (const auto& [p, q] : pairs) {
    const double dist = norm(p - q);
    const double margin =
        bregman_divergence(dgf, p, q) - 0.5 * gamma * dist * dist;
    if (first || margin < report.worst_margin) report.worst_margin = margin;
    first = false;
    if (margin < -1e-10) ++report.violations;
  }
  report.holds = report.violations == 0;
  return report;
}

}  // namespace sadpt
