#pragma once

// Tabular average-reward MDPs: exact evaluation and planning oracles, a
// seeded generative-model simulator, and the stochastic mirror
// descent-ascent planner on the Lagrangian
//   L(mu; v) = <mu, r> + <v, P^T mu - E^T mu>.
//
// State-action pairs are flattened s-major: index(s, a) = s * A + a.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sadpt/random.hpp"
#include "sadpt/solvers.hpp"

namespace sadpt {

class TabularMdp {
 public:
  /// Validates shapes, rewards in [0, 1] and stochastic rows (1e-12). When
  /// `check_ergodicity` is set and A^S <= kErgodicityCheckLimit, every
  /// deterministic policy is checked for a unique stationary distribution and
  /// ErgodicityError is thrown on the first failure.
  static TabularMdp create(int num_states, int num_actions, VectorXd rewards,
                           MatrixXd transitions, bool check_ergodicity = true);

  static constexpr double kErgodicityCheckLimit = 1e4;

  int S() const { return s_; }
  int A() const { return a_; }
  Index pairs() const { return static_cast<Index>(s_) * a_; }
  Index index(int s, int a) const { return static_cast<Index>(s) * a_ + a; }

  /// Length SA.
  const VectorXd& r() const { return r_; }
  /// SA x S; row (s, a) is p(. | s, a).
  const MatrixXd& P() const { return p_; }
  /// SA x S with E((s, a), s') = 1{s = s'}.
  MatrixXd E() const;

  /// True when construction enumerated every deterministic policy.
  bool ergodicity_validated() const { return validated_; }

 private:
  TabularMdp() = default;

  int s_ = 0;
  int a_ = 0;
  VectorXd r_;
  MatrixXd p_;
  bool validated_ = false;
};

/// pi(a | s) as an S x A table with rows on the simplex.
struct Policy {
  MatrixXd table;

  static Policy uniform(int num_states, int num_actions);
  static Policy deterministic(const std::vector<int>& actions, int num_actions);

  /// Throws DomainError unless every row is a probability vector (1e-10).
  void validate() const;
};

/// The S x S chain P^pi(s, s') = sum_a pi(a|s) p(s'|s, a).
MatrixXd policy_transition(const TabularMdp& mdp, const Policy& pi);

/// Unique nu with nu^T P^pi = nu^T and sum nu = 1, from the fixed-point
/// system with the normalization row. Throws ErgodicityError when the
/// stationary distribution is not unique.
VectorXd stationary_distribution(const TabularMdp& mdp, const Policy& pi);

/// mu^pi(s, a) = pi(a|s) nu^pi(s), length SA.
VectorXd occupancy_measure(const TabularMdp& mdp, const Policy& pi);

/// ||E^T mu - P^T mu||_inf; zero for stationary measures.
double feasibility_residual(const TabularMdp& mdp, const VectorXd& mu);

struct ValueAndGain {
  double rho = 0.0;
  /// Bias with <nu^pi, v> = 0.
  VectorXd v;
  double span = 0.0;
  /// max_s |sum_a pi(a|s)[r - rho + p.v] - v(s)|.
  double bellman_residual = 0.0;
};

ValueAndGain gain_and_bias(const TabularMdp& mdp, const Policy& pi);

struct OptimalSolution {
  std::vector<int> actions;
  Policy policy;
  double rho = 0.0;
  VectorXd mu;
};

struct PlanningOptions {
  /// Largest A^S enumerated exhaustively.
  double enumeration_limit = 1e6;
  /// Fall back to policy iteration above the limit instead of throwing.
  bool allow_policy_iteration = false;
};

/// Best deterministic policy by exhaustive enumeration (first maximizer in
/// lexicographic action order). Above the enumeration limit, throws
/// GuardError unless policy iteration is allowed.
OptimalSolution optimal_policy_oracle(const TabularMdp& mdp,
                                      const PlanningOptions& options = {});

/// Average-reward policy iteration from the all-zeros policy.
OptimalSolution policy_iteration(const TabularMdp& mdp, int max_iterations = 1000);

double lagrangian(const TabularMdp& mdp, const VectorXd& mu, const VectorXd& v);

/// Generative model: next-state draws with a query counter.
class GenerativeSimulator {
 public:
  GenerativeSimulator(const TabularMdp& mdp, std::uint64_t seed);

  const TabularMdp& mdp() const { return *mdp_; }
  std::int64_t query_count() const { return queries_; }
  Rng& rng() { return rng_; }

  /// s' ~ p(. | s, a) using the simulator's own generator. One query.
  int next_state(int s, int a);
  /// Same, drawing from `rng`. One query.
  int next_state(int s, int a, Rng& rng);

 private:
  const TabularMdp* mdp_;
  Rng rng_;
  std::int64_t queries_ = 0;
  MatrixXd cumulative_;
};

/// (s, a) ~ mu, s' ~ p(. | s, a); returns e_{s'} - e_s. One query.
/// Throws DomainError when mu is not a strictly positive simplex point.
VectorXd sample_grad_v(GenerativeSimulator& sim, const VectorXd& mu, Rng& rng);

/// Entry (s, a) is r(s, a) + v(s'_{s,a}) - v(s) with one fresh next state per
/// pair. SA queries.
VectorXd sample_grad_mu(GenerativeSimulator& sim, const VectorXd& v, Rng& rng);

struct MdpTuning {
  double eta_mu = 0.0;
  double eta_v = 0.0;
  double rho_v = 0.0;
};

/// eta_mu = sqrt(log(SA) / (S T)), eta_v = sqrt(SA / T), rho_v = 4 eta_mu.
/// Throws ParameterError when SA < 2 (eta_mu would vanish).
MdpTuning tune_theorem3(int num_states, int num_actions, std::int64_t horizon);

struct MdpRunParams {
  double eta_v = 0.0;
  double eta_mu = 0.0;
  double rho_v = 0.0;
  std::int64_t horizon = 1;
  /// Empty means uniform.
  VectorXd mu_init;
  std::vector<std::int64_t> checkpoints;

  void apply(const MdpTuning& tuning);
};

struct MdpTracePoint {
  TracePoint base;
  /// rho* - rho^{pi_bar_t}; NaN without an optimal solution.
  double rho_gap = 0.0;
  std::int64_t queries = 0;
};

struct MdpRunResult {
  VectorXd v_avg;
  VectorXd mu_avg;
  Policy policy;
  std::vector<MdpTracePoint> trace;
  std::int64_t queries = 0;
  double min_mu_entry = 0.0;
  double max_v_inf = 0.0;
};

/// Starting from v_1 = 0 and mu_1, each round samples g_v at mu_t and takes
///   v_{t+1} = argmin <v, g_v> + rho_v ||v||_inf^2 + ||v - v_t||^2 / (2 eta_v),
/// then samples g_mu at the pre-update v_t and takes an exponentiated-gradient
/// ascent step on mu. Outputs uniform averages over t = 1..T. At checkpoints
/// with `optimal` present, gap_running_avg holds
/// L(mu*; v_bar) - L(mu_bar; v^{pi_bar}) and rho_gap holds rho* - rho^{pi_bar}.
MdpRunResult comida_mdp_run(GenerativeSimulator& sim, const MdpRunParams& params,
                            Rng& rng, const OptimalSolution* optimal = nullptr);

/// pi(a|s) = mu(s, a) / sum_a' mu(s, a'); uniform rows where the state
/// mass is below 1e-15.
Policy extract_policy(const TabularMdp& mdp, const VectorXd& mu);

struct GapIdentity {
  double lhs = 0.0;  // L(mu*; v_bar) - L(mu_bar; v^{pi_bar})
  double rhs = 0.0;  // rho* - rho^{pi_bar}
};

GapIdentity duality_gap_identity(const TabularMdp& mdp, const VectorXd& mu_bar,
                                 const VectorXd& v_bar, const Policy& pi_bar,
                                 const OptimalSolution& optimal);

/// Dirichlet(1, ..., 1) transition rows plus a 0.01/S floor, renormalized;
/// rewards uniform on [0, 1].
TabularMdp random_ergodic_mdp(int num_states, int num_actions, Rng& rng);

/// CSV with the solver trace columns plus rho_gap,queries.
void write_mdp_trace_csv(std::ostream& out, const std::vector<MdpTracePoint>& trace);

}  // namespace sadpt
