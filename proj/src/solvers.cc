#include "sadpt/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "sadpt/errors.hpp"

namespace sadpt {
namespace {

bool close(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

template <class Oracle, class Update>
RunResult run_loop(const SolverParams& params, std::uint64_t seed,
                   const GapEvaluator& gap, Oracle&& oracle, Update&& update) {
  std::vector<std::int64_t> checkpoints = params.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()),
                    checkpoints.end());
  auto next_checkpoint = checkpoints.begin();

  RunResult result;
  result.seed = seed;
  VectorXd x = params.x_init;
  VectorXd y = params.y_init;
  result.x_avg = VectorXd::Zero(x.size());
  result.y_avg = VectorXd::Zero(y.size());
  if (params.keep_iterates) {
    result.x_iterates.reserve(static_cast<std::size_t>(params.horizon));
    result.y_iterates.reserve(static_cast<std::size_t>(params.horizon));
  }

  for (std::int64_t t = 1; t <= params.horizon; ++t) {
    if (params.keep_iterates) {
      result.x_iterates.push_back(x);
      result.y_iterates.push_back(y);
    }
    result.max_iterate_norm = std::max(
        result.max_iterate_norm, std::sqrt(x.squaredNorm() + y.squaredNorm()));
    const double w = 1.0 / static_cast<double>(t);
    result.x_avg += w * (x - result.x_avg);
    result.y_avg += w * (y - result.y_avg);

    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t));
    GradientSample sample = oracle(x, y, rng);
    result.queries += sample.queries_used;

    if (next_checkpoint != checkpoints.end() && *next_checkpoint == t) {
      TracePoint p;
      p.t = t;
      p.norm_x_dev = (x - params.x_init).norm();
      p.norm_y_dev = (y - params.y_init).norm();
      p.grad_x_norm = sample.g_x_tilde.norm();
      p.grad_y_norm = sample.g_y_tilde.norm();
      p.gap_running_avg = gap ? gap(result.x_avg, result.y_avg)
                              : std::numeric_limits<double>::quiet_NaN();
      result.trace.push_back(p);
      ++next_checkpoint;
    }
    update(x, y, sample);
  }
  return result;
}

}  // namespace

void validate(const SolverParams& p, bool allow_zero_step) {
  const auto bad_step = [&](double eta) {
    return !std::isfinite(eta) || eta < 0.0 || (!allow_zero_step && eta == 0.0);
  };
  if (bad_step(p.eta_x) || bad_step(p.eta_y)) {
    throw ParameterError("step sizes must be positive and finite");
  }
  if (!(p.rho_x >= 0.0) || !(p.rho_y >= 0.0) || !std::isfinite(p.rho_x) ||
      !std::isfinite(p.rho_y)) {
    throw ParameterError("stabilization weights must be nonnegative");
  }
  if (p.horizon < 1) throw ParameterError("horizon must be >= 1");
  for (std::int64_t c : p.checkpoints) {
    if (c < 1 || c > p.horizon) {
      throw ParameterError("checkpoint " + std::to_string(c) +
                           " outside [1, T]");
    }
  }
  switch (p.coupling) {
    case Coupling::kNone:
      break;
    case Coupling::kTheorem1: {
      const double l2 = p.coupling_constant * p.coupling_constant;
      if (!close(p.rho_y, 2.0 * p.eta_x * l2) ||
          !close(p.rho_x, 2.0 * p.eta_y * l2)) {
        throw ParameterError(
            "coupling violated: need rho_y = 2 eta_x L_M^2, rho_x = 2 eta_y L_M^2");
      }
      break;
    }
    case Coupling::kTheorem2: {
      const double l2 = p.coupling_constant * p.coupling_constant;
      if (!(p.gamma_x > 0.0) || !(p.gamma_y > 0.0)) {
        throw ParameterError("strong convexity moduli must be positive");
      }
      if (!close(p.rho_x, p.eta_y * l2 / p.gamma_y) ||
          !close(p.rho_y, p.eta_x * l2 / p.gamma_x)) {
        throw ParameterError(
            "coupling violated: need rho_x = eta_y L^2/gamma_y, "
            "rho_y = eta_x L^2/gamma_x");
      }
      break;
    }
  }
}

std::vector<std::int64_t> power_of_two_checkpoints(std::int64_t horizon) {
  std::vector<std::int64_t> out;
  for (std::int64_t t = 1; t <= horizon; t *= 2) out.push_back(t);
  if (out.empty() || out.back() != horizon) out.push_back(horizon);
  return out;
}

void StepTuning::apply_to(SolverParams& params) const {
  params.eta_x = eta_x;
  params.eta_y = eta_y;
  params.rho_x = rho_x;
  params.rho_y = rho_y;
  params.coupling = coupling;
  params.coupling_constant = coupling_constant;
  params.gamma_x = gamma_x;
  params.gamma_y = gamma_y;
}

StepTuning tune_theorem1(double L_M, std::int64_t horizon) {
  if (!(L_M > 0.0) || horizon < 1) {
    throw ParameterError("tune_theorem1 needs L_M > 0 and T >= 1");
  }
  StepTuning s;
  s.eta_x = s.eta_y = 1.0 / (L_M * std::sqrt(static_cast<double>(horizon)));
  s.rho_y = 2.0 * s.eta_x * L_M * L_M;
  s.rho_x = 2.0 * s.eta_y * L_M * L_M;
  s.coupling = Coupling::kTheorem1;
  s.coupling_constant = L_M;
  return s;
}

StepTuning tune_corollary1(double L, double gamma_x, double gamma_y,
                           std::int64_t horizon) {
  if (!(L > 0.0) || !(gamma_x > 0.0) || !(gamma_y > 0.0) || horizon < 1) {
    throw ParameterError("tune_corollary1 needs L, gamma_x, gamma_y > 0 and T >= 1");
  }
  StepTuning s;
  s.eta_x = s.eta_y =
      std::sqrt(gamma_x * gamma_y / (L * L * static_cast<double>(horizon)));
  s.rho_x = s.eta_y * L * L / gamma_y;
  s.rho_y = s.eta_x * L * L / gamma_x;
  s.coupling = Coupling::kTheorem2;
  s.coupling_constant = L;
  s.gamma_x = gamma_x;
  s.gamma_y = gamma_y;
  return s;
}

GapEvaluator comparator_gap(const BilinearGame& game, VectorXd x_star,
                            VectorXd y_star) {
  return [game, xs = std::move(x_star), ys = std::move(y_star)](
             const VectorXd& xb, const VectorXd& yb) {
    return duality_gap(game, xb, yb, xs, ys);
  };
}

GapEvaluator restricted_gap(const BilinearGame& game, VectorXd x_center,
                            VectorXd y_center, double radius) {
  return [game, xc = std::move(x_center), yc = std::move(y_center), radius](
             const VectorXd& xb, const VectorXd& yb) {
    return restricted_duality_gap(game, xb, yb, xc, yc, radius);
  };
}

RunResult cogda_run(const BilinearGame& game, const NoiseModel& noise,
                    const SolverParams& params, std::uint64_t seed,
                    const GapEvaluator& gap) {
  validate(params);
  internal::check_same_size(params.x_init.size(), game.dim_x(), "cogda_run x_1");
  internal::check_same_size(params.y_init.size(), game.dim_y(), "cogda_run y_1");
  const Stabilizer stab_x{params.rho_x, params.x_init, StabilizerNorm::kL2Squared};
  const Stabilizer stab_y{params.rho_y, params.y_init, StabilizerNorm::kL2Squared};
  return run_loop(
      params, seed, gap,
      [&](const VectorXd& x, const VectorXd& y, Rng& rng) {
        return sample_oracle(game, noise, x, y, rng);
      },
      [&](VectorXd& x, VectorXd& y, const GradientSample& g) {
        x = prox_euclidean_composite(x, g.g_x_tilde, params.eta_x, stab_x);
        y = prox_euclidean_composite(y, -g.g_y_tilde, params.eta_y, stab_y);
      });
}

GeometryPair GeometryPair::euclidean(Index dim_x, Index dim_y) {
  return {DistanceGenerator::Euclidean(VectorXd::Zero(dim_x)),
          DistanceGenerator::Euclidean(VectorXd::Zero(dim_y)),
          StabilizerNorm::kL2Squared, StabilizerNorm::kL2Squared};
}

RunResult comida_run(const SubBilinearProblem& problem,
                     const GeometryPair& geometry, const SolverParams& params,
                     std::uint64_t seed, const GapEvaluator& gap) {
  validate(params);
  internal::check_same_size(params.x_init.size(), problem.dim_x, "comida_run x_1");
  internal::check_same_size(params.y_init.size(), problem.dim_y, "comida_run y_1");
  internal::check_same_size(geometry.dgf_x.dimension(), problem.dim_x,
                            "comida_run x geometry");
  internal::check_same_size(geometry.dgf_y.dimension(), problem.dim_y,
                            "comida_run y geometry");
  if (!problem.oracle) throw ConfigurationError("problem has no oracle");
  const Stabilizer stab_x{params.rho_x, params.x_init, geometry.stabilizer_x};
  const Stabilizer stab_y{params.rho_y, params.y_init, geometry.stabilizer_y};

  // Fail before the first round rather than at it.
  (void)composite_step(geometry.dgf_x, stab_x, params.x_init,
                       VectorXd::Zero(problem.dim_x), params.eta_x);
  (void)composite_step(geometry.dgf_y, stab_y, params.y_init,
                       VectorXd::Zero(problem.dim_y), params.eta_y);

  return run_loop(
      params, seed, gap,
      [&](const VectorXd& x, const VectorXd& y, Rng& rng) {
        return problem.oracle(x, y, rng);
      },
      [&](VectorXd& x, VectorXd& y, const GradientSample& g) {
        x = composite_step(geometry.dgf_x, stab_x, x, g.g_x_tilde, params.eta_x);
        y = composite_step(geometry.dgf_y, stab_y, y, -g.g_y_tilde, params.eta_y);
      });
}

RunResult sgda_run(const BilinearGame& game, const NoiseModel& noise,
                   const SolverParams& params, std::uint64_t seed,
                   const GapEvaluator& gap) {
  validate(params, /*allow_zero_step=*/true);
  if (params.rho_x != 0.0 || params.rho_y != 0.0) {
    throw ParameterError("sgda_run takes no stabilization weights");
  }
  internal::check_same_size(params.x_init.size(), game.dim_x(), "sgda_run x_1");
  internal::check_same_size(params.y_init.size(), game.dim_y(), "sgda_run y_1");
  return run_loop(
      params, seed, gap,
      [&](const VectorXd& x, const VectorXd& y, Rng& rng) {
        return sample_oracle(game, noise, x, y, rng);
      },
      [&](VectorXd& x, VectorXd& y, const GradientSample& g) {
        x -= params.eta_x * g.g_x_tilde;
        y += params.eta_y * g.g_y_tilde;
      });
}

double theorem2_bound(const GeometryPair& geometry, double L,
                      const SolverParams& params, const VectorXd& x_star,
                      const VectorXd& y_star) {
  if (params.coupling != Coupling::kTheorem2 || !close(params.coupling_constant, L)) {
    throw ParameterError("theorem2_bound needs Theorem-2 coupled parameters for this L");
  }
  validate(params);
  const double t = static_cast<double>(params.horizon);
  const Norm x_dual = geometry.dgf_x.norm().dual();  // ||.||_{x,*}
  const Norm y_dual = geometry.dgf_y.norm().dual();  // ||.||_{y,*}
  const double dy = x_dual(y_star - params.y_init);
  const double dx = y_dual(x_star - params.x_init);
  return bregman_divergence(geometry.dgf_y, y_star, params.y_init) / (params.eta_y * t) +
         0.5 * params.rho_y * dy * dy +
         bregman_divergence(geometry.dgf_x, x_star, params.x_init) / (params.eta_x * t) +
         0.5 * params.rho_x * dx * dx +
         L * L * (params.eta_y / (2.0 * params.gamma_y) +
                  params.eta_x / (2.0 * params.gamma_x));
}

void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
  out << "t,norm_x_dev,norm_y_dev,grad_x_norm,grad_y_norm,gap_running_avg\n";
  char buf[256];
  for (const TracePoint& p : trace) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(p.t), p.norm_x_dev, p.norm_y_dev,
                  p.grad_x_norm, p.grad_y_norm, p.gap_running_avg);
    out << buf;
  }
}

}  // namespace sadpt
