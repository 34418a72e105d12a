#pragma once

// Stochastic gradient descent-ascent with stabilization (COGDA), its
// mirror-descent generalization (COMIDA), and the unstabilized baseline.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "sadpt/geometry.hpp"
#include "sadpt/problems.hpp"

namespace sadpt {

/// Which parameter coupling a run must satisfy.
enum class Coupling {
  kNone,
  /// rho_y = 2 eta_x L_M^2, rho_x = 2 eta_y L_M^2 with L_M = coupling_constant.
  kTheorem1,
  /// rho_x = eta_y L^2 / gamma_y, rho_y = eta_x L^2 / gamma_x with
  /// L = coupling_constant.
  kTheorem2,
};

struct SolverParams {
  double eta_x = 0.0;
  double eta_y = 0.0;
  double rho_x = 0.0;
  double rho_y = 0.0;
  std::int64_t horizon = 1;
  VectorXd x_init;
  VectorXd y_init;
  /// Iterations (1-based) at which a trace record is taken. Empty means none.
  std::vector<std::int64_t> checkpoints;

  Coupling coupling = Coupling::kNone;
  double coupling_constant = 0.0;
  double gamma_x = 1.0;
  double gamma_y = 1.0;

  /// Keep x_1..x_T and y_1..y_T in the result. Memory grows with T.
  bool keep_iterates = false;
};

/// Throws ParameterError on out-of-range values or a violated coupling.
/// Zero steps are accepted only when `allow_zero_step` is set.
void validate(const SolverParams& params, bool allow_zero_step = false);

/// Powers of two up to T, plus T itself.
std::vector<std::int64_t> power_of_two_checkpoints(std::int64_t horizon);

struct StepTuning {
  double eta_x = 0.0;
  double eta_y = 0.0;
  double rho_x = 0.0;
  double rho_y = 0.0;
  Coupling coupling = Coupling::kNone;
  double coupling_constant = 0.0;
  double gamma_x = 1.0;
  double gamma_y = 1.0;

  /// Copies steps, weights and the coupling into `params`.
  void apply_to(SolverParams& params) const;
};

/// eta_x = eta_y = 1 / (L_M sqrt(T)), rho_y = 2 eta_x L_M^2, rho_x = 2 eta_y L_M^2.
StepTuning tune_theorem1(double L_M, std::int64_t horizon);

/// eta_x = eta_y = sqrt(gamma_x gamma_y / (L^2 T)),
/// rho_x = eta_y L^2 / gamma_y, rho_y = eta_x L^2 / gamma_x.
StepTuning tune_corollary1(double L, double gamma_x, double gamma_y,
                           std::int64_t horizon);

struct TracePoint {
  std::int64_t t = 0;
  double norm_x_dev = 0.0;  // ||x_t - x_1||
  double norm_y_dev = 0.0;  // ||y_t - y_1||
  double grad_x_norm = 0.0; // ||g_x_tilde(t)||
  double grad_y_norm = 0.0; // ||g_y_tilde(t)||
  double gap_running_avg = 0.0;
};

struct RunResult {
  VectorXd x_avg;
  VectorXd y_avg;
  std::vector<TracePoint> trace;
  std::uint64_t seed = 0;
  std::int64_t queries = 0;
  /// max over t of ||(x_t, y_t)||_2.
  double max_iterate_norm = 0.0;
  std::vector<VectorXd> x_iterates;
  std::vector<VectorXd> y_iterates;
};

/// Maps running averages (x_bar_t, y_bar_t) to the gap reported in the trace.
/// An empty evaluator records NaN.
using GapEvaluator = std::function<double(const VectorXd&, const VectorXd&)>;

/// Gap against a fixed comparator point.
GapEvaluator comparator_gap(const BilinearGame& game, VectorXd x_star,
                            VectorXd y_star);
/// Restricted gap over Euclidean balls of `radius` around a center.
GapEvaluator restricted_gap(const BilinearGame& game, VectorXd x_center,
                            VectorXd y_center, double radius);

/// Composite objective gradient descent-ascent:
///   x_{t+1} = (x_t - eta_x g_x_tilde + rho_x eta_x x_1) / (1 + rho_x eta_x)
///   y_{t+1} = (y_t + eta_y g_y_tilde + rho_y eta_y y_1) / (1 + rho_y eta_y)
/// Both gradients of round t come from one oracle call at (x_t, y_t).
/// Round t draws its noise from Rng::stream(seed, t).
RunResult cogda_run(const BilinearGame& game, const NoiseModel& noise,
                    const SolverParams& params, std::uint64_t seed,
                    const GapEvaluator& gap = {});

/// Which stabilizer norms the two players use; weights come from
/// SolverParams::rho_x / rho_y and centers from the initial points.
struct GeometryPair {
  DistanceGenerator dgf_x;
  DistanceGenerator dgf_y;
  StabilizerNorm stabilizer_x = StabilizerNorm::kL2Squared;
  StabilizerNorm stabilizer_y = StabilizerNorm::kL2Squared;

  static GeometryPair euclidean(Index dim_x, Index dim_y);
};

/// Composite objective mirror descent-ascent on a sub-bilinear problem.
/// Throws ConfigurationError when geometry::composite_step has no exact
/// solver for a player's (generator, stabilizer) pair.
RunResult comida_run(const SubBilinearProblem& problem,
                     const GeometryPair& geometry, const SolverParams& params,
                     std::uint64_t seed, const GapEvaluator& gap = {});

/// Plain simultaneous gradient descent-ascent: no stabilization, no
/// projection. Stabilization weights in `params` must be zero.
RunResult sgda_run(const BilinearGame& game, const NoiseModel& noise,
                   const SolverParams& params, std::uint64_t seed,
                   const GapEvaluator& gap = {});

/// Theorem-2 style certified bound for COMIDA:
///   D_y(y*, y_1)/(eta_y T) + rho_y ||y* - y_1||_{x,*}^2 / 2
/// + D_x(x*, x_1)/(eta_x T) + rho_x ||x* - x_1||_{y,*}^2 / 2
/// + L^2 (eta_y / (2 gamma_y) + eta_x / (2 gamma_x)).
/// Requires the Theorem-2 coupling in `params`.
double theorem2_bound(const GeometryPair& geometry, double L,
                      const SolverParams& params, const VectorXd& x_star,
                      const VectorXd& y_star);

/// CSV with header t,norm_x_dev,norm_y_dev,grad_x_norm,grad_y_norm,gap_running_avg.
void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

}  // namespace sadpt
