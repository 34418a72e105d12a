#pragma once

// Experiment driver: JSON configuration, seeded sweeps over (horizon, seed)
// cells, CSV output and log-log rate fitting.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sadpt/amdp.hpp"
#include "sadpt/problems.hpp"

namespace sadpt {

enum class Scenario { kBilinearCogda, kBilinearComida, kBilinearSgdaContrast, kAmdpPlan };
enum class TuningKind { kTheorem1, kCorollary1, kTheorem3, kManual };
enum class GapKind { kSaddle, kRestricted };

/// Parameters of a Manual tuning. Which ones are required depends on the
/// scenario; absent ones stay empty.
struct ManualTuning {
  std::optional<double> eta_x, eta_y, rho_x, rho_y;
  std::optional<double> eta_v, eta_mu, rho_v;
};

struct BilinearProblemSpec {
  BilinearGame game;
  NoiseModel noise;
};

struct MdpProblemSpec {
  std::optional<TabularMdp> mdp;
};

struct GapSpec {
  GapKind kind = GapKind::kRestricted;
  double radius = 1.0;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::kBilinearCogda;
  std::optional<BilinearProblemSpec> bilinear;
  MdpProblemSpec amdp;
  std::vector<std::int64_t> horizons;
  std::vector<std::uint64_t> seeds;
  TuningKind tuning = TuningKind::kTheorem1;
  ManualTuning manual;
  /// Output directory; empty writes nothing.
  std::string output;
  /// Explicit checkpoints; empty means powers of two. T is always recorded.
  std::vector<std::int64_t> checkpoints;
  GapSpec gap;
  /// Initial points; empty means zeros (x, y) or uniform (mu).
  VectorXd x_init, y_init, mu_init;
};

/// Parses a JSON document. Relative problem_file paths resolve against
/// `base_dir`. Throws ConfigurationError naming the offending field.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& base_dir = ".");
ExperimentConfig parse_config(const std::string& path);

/// Problem documents on their own (the "problem" field, or a problem file).
BilinearProblemSpec parse_bilinear_problem(const std::string& json_text);
TabularMdp parse_mdp(const std::string& json_text);
std::string game_to_json(const BilinearProblemSpec& spec);
std::string mdp_to_json(const TabularMdp& mdp);

struct CellResult {
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  /// Final gap (bilinear) or rho* - rho^{pi_bar_T} (AMDP).
  double value = 0.0;
  double max_iterate_norm = 0.0;
  std::int64_t queries = 0;
  /// Contrast runs only: max iterate norm of the stabilized baseline.
  double baseline_max_norm = 0.0;
  /// AMDP only: span of v^{pi_bar_T}.
  double bias_span = 0.0;
};

struct HorizonStat {
  std::int64_t horizon = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::vector<std::string> warnings;
};

struct SweepSummary {
  std::vector<CellResult> cells;
  std::vector<HorizonStat> per_horizon;
  std::optional<RateFit> fit;
  std::vector<std::string> warnings;
};

/// OLS of log(gap) on log(T). Nonpositive or non-finite gaps are dropped with
/// a warning; fewer than 3 usable points throws ParameterError.
RateFit fit_rate_slope(const std::vector<std::pair<double, double>>& points);

/// Runs every (T, seed) cell. Cells may run in parallel (SADPT_THREADS);
/// results do not depend on the thread count. With a nonempty output
/// directory, writes trace_T<T>_seed<seed>.csv per cell (plus
/// baseline_T<T>_seed<seed>.csv for contrast runs), runs.csv, summary.csv,
/// and fit.csv when a slope is defined.
SweepSummary run_scenario(const ExperimentConfig& config);

/// "Theorem1" | "Corollary1" | "Theorem3" with key=value parameters
/// (L_M, T | L, gamma_x, gamma_y, T | S, A, T). Returns a JSON object.
std::string print_tuning(const std::string& theorem,
                         const std::vector<std::string>& params);

}  // namespace sadpt
