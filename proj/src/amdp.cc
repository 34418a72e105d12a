#include "sadpt/amdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "sadpt/errors.hpp"
#include "sadpt/geometry.hpp"

namespace sadpt {
namespace {

constexpr double kRowTolerance = 1e-12;

void check_policy_shape(const TabularMdp& mdp, const Policy& pi) {
  if (pi.table.rows() != mdp.S() || pi.table.cols() != mdp.A()) {
    throw DimensionError("policy table is " + std::to_string(pi.table.rows()) +
                         "x" + std::to_string(pi.table.cols()) + ", MDP is " +
                         std::to_string(mdp.S()) + "x" + std::to_string(mdp.A()));
  }
  pi.validate();
}

VectorXd policy_reward(const TabularMdp& mdp, const Policy& pi) {
  VectorXd out = VectorXd::Zero(mdp.S());
  for (int s = 0; s < mdp.S(); ++s) {
    for (int a = 0; a < mdp.A(); ++a) out[s] += pi.table(s, a) * mdp.r()[mdp.index(s, a)];
  }
  return out;
}

// Visits every deterministic policy in lexicographic order.
template <class Fn>
void for_each_deterministic_policy(int num_states, int num_actions, Fn&& fn) {
  std::vector<int> actions(static_cast<std::size_t>(num_states), 0);
  while (true) {
    fn(actions);
    int s = 0;
    while (s < num_states && ++actions[static_cast<std::size_t>(s)] == num_actions) {
      actions[static_cast<std::size_t>(s)] = 0;
      ++s;
    }
    if (s == num_states) return;
  }
}

double policy_count(int num_states, int num_actions) {
  return std::pow(static_cast<double>(num_actions), num_states);
}

double stationary_residual(const MatrixXd& chain, const VectorXd& nu) {
  return (chain.transpose() * nu - nu).lpNorm<Eigen::Infinity>();
}

double bellman_residual(const MatrixXd& chain, const VectorXd& r_pi, double rho,
                        const VectorXd& v) {
  return (r_pi.array() - rho + (chain * v).array() - v.array())
      .abs()
      .maxCoeff();
}

int draw_index(const VectorXd& probabilities, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  Index last_positive = 0;
  for (Index i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    acc += probabilities[i];
    last_positive = i;
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding can leave the total just under 1.
  return static_cast<int>(last_positive);
}

}  // namespace

TabularMdp TabularMdp::create(int num_states, int num_actions, VectorXd rewards,
                              MatrixXd transitions, bool check_ergodicity) {
  if (num_states < 1 || num_actions < 1) {
    throw ParameterError("S and A must be positive");
  }
  const Index pairs = static_cast<Index>(num_states) * num_actions;
  internal::check_same_size(rewards.size(), pairs, "reward table");
  internal::check_same_size(transitions.rows(), pairs, "transition rows");
  internal::check_same_size(transitions.cols(), num_states, "transition columns");
  for (Index i = 0; i < pairs; ++i) {
    if (!(rewards[i] >= 0.0 && rewards[i] <= 1.0)) {
      throw DomainError("rewards must lie in [0, 1]");
    }
    if (!transitions.row(i).allFinite() || transitions.row(i).minCoeff() < 0.0) {
      throw DomainError("transition entries must be finite and nonnegative");
    }
    if (std::abs(transitions.row(i).sum() - 1.0) > kRowTolerance) {
      throw DomainError("transition row " + std::to_string(i) +
                        " does not sum to 1");
    }
  }
  TabularMdp mdp;
  mdp.s_ = num_states;
  mdp.a_ = num_actions;
  mdp.r_ = std::move(rewards);
  mdp.p_ = std::move(transitions);
  if (check_ergodicity &&
      policy_count(num_states, num_actions) <= kErgodicityCheckLimit) {
    for_each_deterministic_policy(num_states, num_actions,
                                  [&](const std::vector<int>& actions) {
                                    stationary_distribution(
                                        mdp, Policy::deterministic(actions, num_actions));
                                  });
    mdp.validated_ = true;
  }
  return mdp;
}

MatrixXd TabularMdp::E() const {
  MatrixXd e = MatrixXd::Zero(pairs(), s_);
  for (int s = 0; s < s_; ++s) {
    for (int a = 0; a < a_; ++a) e(index(s, a), s) = 1.0;
  }
  return e;
}

Policy Policy::uniform(int num_states, int num_actions) {
  return {MatrixXd::Constant(num_states, num_actions, 1.0 / num_actions)};
}

Policy Policy::deterministic(const std::vector<int>& actions, int num_actions) {
  Policy pi{MatrixXd::Zero(static_cast<Index>(actions.size()), num_actions)};
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= num_actions) {
      throw DomainError("action index out of range");
    }
    pi.table(static_cast<Index>(s), actions[s]) = 1.0;
  }
  return pi;
}

void Policy::validate() const {
  for (Index s = 0; s < table.rows(); ++s) {
    if (!table.row(s).allFinite() || table.row(s).minCoeff() < 0.0 ||
        std::abs(table.row(s).sum() - 1.0) > 1e-10) {
      throw DomainError("policy row " + std::to_string(s) + " is not on the simplex");
    }
  }
}

MatrixXd policy_transition(const TabularMdp& mdp, const Policy& pi) {
  check_policy_shape(mdp, pi);
  MatrixXd chain = MatrixXd::Zero(mdp.S(), mdp.S());
  for (int s = 0; s < mdp.S(); ++s) {
    for (int a = 0; a < mdp.A(); ++a) {
      const double w = pi.table(s, a);
      if (w != 0.0) chain.row(s) += w * mdp.P().row(mdp.index(s, a));
    }
  }
  return chain;
}

VectorXd stationary_distribution(const TabularMdp& mdp, const Policy& pi) {
  const MatrixXd chain = policy_transition(mdp, pi);
  const int n = mdp.S();
  MatrixXd system(n + 1, n);
  system.topRows(n) = chain.transpose() - MatrixXd::Identity(n, n);
  system.row(n).setOnes();
  VectorXd rhs = VectorXd::Zero(n + 1);
  rhs[n] = 1.0;

  Eigen::ColPivHouseholderQR<MatrixXd> qr(system);
  qr.setThreshold(1e-10);
  if (qr.rank() < n) {
    throw ErgodicityError("chain has no unique stationary distribution");
  }
  VectorXd nu = qr.solve(rhs);
  nu += qr.solve(rhs - system * nu);
  for (Index i = 0; i < nu.size(); ++i) {
    if (nu[i] < 0.0) {
      if (nu[i] < -1e-9) {
        throw ErgodicityError("stationary solve returned a negative mass");
      }
      nu[i] = 0.0;
    }
  }
  nu /= nu.sum();
  if (stationary_residual(chain, nu) > 1e-10) {
    throw ErgodicityError("stationary distribution is numerically ill-defined");
  }
  return nu;
}

VectorXd occupancy_measure(const TabularMdp& mdp, const Policy& pi) {
  const VectorXd nu = stationary_distribution(mdp, pi);
  VectorXd mu(mdp.pairs());
  for (int s = 0; s < mdp.S(); ++s) {
    for (int a = 0; a < mdp.A(); ++a) mu[mdp.index(s, a)] = pi.table(s, a) * nu[s];
  }
  return mu;
}

double feasibility_residual(const TabularMdp& mdp, const VectorXd& mu) {
  internal::check_same_size(mu.size(), mdp.pairs(), "feasibility_residual");
  return (mdp.E().transpose() * mu - mdp.P().transpose() * mu)
      .lpNorm<Eigen::Infinity>();
}

ValueAndGain gain_and_bias(const TabularMdp& mdp, const Policy& pi) {
  const MatrixXd chain = policy_transition(mdp, pi);
  const VectorXd nu = stationary_distribution(mdp, pi);
  const VectorXd r_pi = policy_reward(mdp, pi);
  const int n = mdp.S();

  ValueAndGain out;
  out.rho = nu.dot(r_pi);
  MatrixXd system(n + 1, n);
  system.topRows(n) = MatrixXd::Identity(n, n) - chain;
  system.row(n) = nu.transpose();
  VectorXd rhs(n + 1);
  rhs.head(n) = r_pi.array() - out.rho;
  rhs[n] = 0.0;

  Eigen::ColPivHouseholderQR<MatrixXd> qr(system);
  out.v = qr.solve(rhs);
  out.v += qr.solve(rhs - system * out.v);
  out.span = out.v.maxCoeff() - out.v.minCoeff();
  out.bellman_residual = bellman_residual(chain, r_pi, out.rho, out.v);
  return out;
}

OptimalSolution policy_iteration(const TabularMdp& mdp, int max_iterations) {
  std::vector<int> actions(static_cast<std::size_t>(mdp.S()), 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Policy pi = Policy::deterministic(actions, mdp.A());
    const ValueAndGain vg = gain_and_bias(mdp, pi);
    const VectorXd q = mdp.r() + mdp.P() * vg.v;
    bool changed = false;
    for (int s = 0; s < mdp.S(); ++s) {
      int best = actions[static_cast<std::size_t>(s)];
      for (int a = 0; a < mdp.A(); ++a) {
        if (q[mdp.index(s, a)] > q[mdp.index(s, best)] + 1e-12) best = a;
      }
      if (best != actions[static_cast<std::size_t>(s)]) {
        actions[static_cast<std::size_t>(s)] = best;
        changed = true;
      }
    }
    if (!changed) {
      OptimalSolution out;
      out.actions = actions;
      out.policy = pi;
      out.rho = vg.rho;
      out.mu = occupancy_measure(mdp, pi);
      return out;
    }
  }
  throw ParameterError("policy iteration did not converge");
}

OptimalSolution optimal_policy_oracle(const TabularMdp& mdp,
                                      const PlanningOptions& options) {
  if (policy_count(mdp.S(), mdp.A()) > options.enumeration_limit) {
    if (options.allow_policy_iteration) return policy_iteration(mdp);
    throw GuardError("A^S exceeds the enumeration limit; enable policy iteration");
  }
  OptimalSolution best;
  best.rho = -std::numeric_limits<double>::infinity();
  for_each_deterministic_policy(
      mdp.S(), mdp.A(), [&](const std::vector<int>& actions) {
        const Policy pi = Policy::deterministic(actions, mdp.A());
        const double rho = stationary_distribution(mdp, pi).dot(policy_reward(mdp, pi));
        if (rho > best.rho) {
          best.rho = rho;
          best.actions = actions;
        }
      });
  best.policy = Policy::deterministic(best.actions, mdp.A());
  best.mu = occupancy_measure(mdp, best.policy);
  return best;
}

double lagrangian(const TabularMdp& mdp, const VectorXd& mu, const VectorXd& v) {
  internal::check_same_size(mu.size(), mdp.pairs(), "lagrangian mu");
  internal::check_same_size(v.size(), mdp.S(), "lagrangian v");
  double constraint = 0.0;
  for (int s = 0; s < mdp.S(); ++s) {
    for (int a = 0; a < mdp.A(); ++a) {
      const Index i = mdp.index(s, a);
      constraint += mu[i] * (mdp.P().row(i).dot(v) - v[s]);
    }
  }
  return mu.dot(mdp.r()) + constraint;
}

GenerativeSimulator::GenerativeSimulator(const TabularMdp& mdp, std::uint64_t seed)
    : mdp_(&mdp), rng_(seed), cumulative_(mdp.P()) {
  for (Index i = 0; i < cumulative_.rows(); ++i) {
    for (Index j = 1; j < cumulative_.cols(); ++j) {
      cumulative_(i, j) += cumulative_(i, j - 1);
    }
  }
}

int GenerativeSimulator::next_state(int s, int a) { return next_state(s, a, rng_); }

int GenerativeSimulator::next_state(int s, int a, Rng& rng) {
  if (s < 0 || s >= mdp_->S() || a < 0 || a >= mdp_->A()) {
    throw DomainError("state-action pair out of range");
  }
  ++queries_;
  const Index row = mdp_->index(s, a);
  const double u = uniform01(rng);
  const Index n = cumulative_.cols();
  for (Index j = 0; j < n; ++j) {
    if (u < cumulative_(row, j)) return static_cast<int>(j);
  }
  // u landed in the rounding slack above the last partial sum.
  for (Index j = n - 1; j > 0; --j) {
    if (mdp_->P()(row, j) > 0.0) return static_cast<int>(j);
  }
  return 0;
}

VectorXd sample_grad_v(GenerativeSimulator& sim, const VectorXd& mu, Rng& rng) {
  const TabularMdp& mdp = sim.mdp();
  internal::check_same_size(mu.size(), mdp.pairs(), "sample_grad_v");
  if (!mu.allFinite() || !(mu.minCoeff() > 0.0) || std::abs(mu.sum() - 1.0) > 1e-9) {
    throw DomainError("sample_grad_v needs a strictly positive simplex point");
  }
  const int pair = draw_index(mu, rng);
  const int s = pair / mdp.A();
  const int a = pair % mdp.A();
  const int next = sim.next_state(s, a, rng);
  VectorXd g = VectorXd::Zero(mdp.S());
  g[next] += 1.0;
  g[s] -= 1.0;
  return g;
}

VectorXd sample_grad_mu(GenerativeSimulator& sim, const VectorXd& v, Rng& rng) {
  const TabularMdp& mdp = sim.mdp();
  internal::check_same_size(v.size(), mdp.S(), "sample_grad_mu");
  VectorXd g(mdp.pairs());
  for (int s = 0; s < mdp.S(); ++s) {
    for (int a = 0; a < mdp.A(); ++a) {
      const int next = sim.next_state(s, a, rng);
      g[mdp.index(s, a)] = mdp.r()[mdp.index(s, a)] + (v[next] - v[s]);
    }
  }
  return g;
}

MdpTuning tune_theorem3(int num_states, int num_actions, std::int64_t horizon) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) {
    throw ParameterError("tune_theorem3 needs S, A, T >= 1");
  }
  const double sa = static_cast<double>(num_states) * num_actions;
  if (sa < 2.0) throw ParameterError("tune_theorem3 needs S*A >= 2");
  const double t = static_cast<double>(horizon);
  MdpTuning out;
  out.eta_mu = std::sqrt(std::log(sa) / (num_states * t));
  out.eta_v = std::sqrt(sa / t);
  out.rho_v = 4.0 * out.eta_mu;
  return out;
}

void MdpRunParams::apply(const MdpTuning& tuning) {
  eta_mu = tuning.eta_mu;
  eta_v = tuning.eta_v;
  rho_v = tuning.rho_v;
}

Policy extract_policy(const TabularMdp& mdp, const VectorXd& mu) {
  internal::check_same_size(mu.size(), mdp.pairs(), "extract_policy");
  Policy pi{MatrixXd::Zero(mdp.S(), mdp.A())};
  for (int s = 0; s < mdp.S(); ++s) {
    double mass = 0.0;
    for (int a = 0; a < mdp.A(); ++a) mass += mu[mdp.index(s, a)];
    for (int a = 0; a < mdp.A(); ++a) {
      pi.table(s, a) = mass < 1e-15 ? 1.0 / mdp.A() : mu[mdp.index(s, a)] / mass;
    }
  }
  return pi;
}

MdpRunResult comida_mdp_run(GenerativeSimulator& sim, const MdpRunParams& params,
                            Rng& rng, const OptimalSolution* optimal) {
  const TabularMdp& mdp = sim.mdp();
  if (params.horizon < 1) throw ParameterError("horizon must be >= 1");
  if (!(params.rho_v >= 0.0) || !std::isfinite(params.rho_v)) {
    throw ParameterError("rho_v must be nonnegative");
  }
  for (std::int64_t c : params.checkpoints) {
    if (c < 1 || c > params.horizon) throw ParameterError("checkpoint outside [1, T]");
  }
  std::vector<std::int64_t> checkpoints = params.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()),
                    checkpoints.end());
  auto next_checkpoint = checkpoints.begin();

  VectorXd mu = params.mu_init.size() == 0
                    ? VectorXd::Constant(mdp.pairs(), 1.0 / static_cast<double>(mdp.pairs()))
                    : params.mu_init;
  internal::check_same_size(mu.size(), mdp.pairs(), "comida_mdp_run mu_1");
  if (!(mu.minCoeff() > 0.0) || std::abs(mu.sum() - 1.0) > 1e-9) {
    throw DomainError("mu_1 must be strictly inside the simplex");
  }
  const VectorXd mu_first = mu;
  VectorXd v = VectorXd::Zero(mdp.S());

  MdpRunResult out;
  out.v_avg = VectorXd::Zero(mdp.S());
  out.mu_avg = VectorXd::Zero(mdp.pairs());
  out.min_mu_entry = mu.minCoeff();
  const std::int64_t start_queries = sim.query_count();

  for (std::int64_t t = 1; t <= params.horizon; ++t) {
    const double w = 1.0 / static_cast<double>(t);
    out.v_avg += w * (v - out.v_avg);
    out.mu_avg += w * (mu - out.mu_avg);
    out.min_mu_entry = std::min(out.min_mu_entry, mu.minCoeff());
    out.max_v_inf = std::max(out.max_v_inf, v.lpNorm<Eigen::Infinity>());

    const VectorXd g_v = sample_grad_v(sim, mu, rng);
    VectorXd v_next = prox_inf_norm_squared_composite(v, g_v, params.eta_v, params.rho_v);
    const VectorXd g_mu = sample_grad_mu(sim, v, rng);
    VectorXd mu_next = prox_kl_simplex(mu, -g_mu, params.eta_mu);

    if (next_checkpoint != checkpoints.end() && *next_checkpoint == t) {
      MdpTracePoint p;
      p.base.t = t;
      p.base.norm_x_dev = v.norm();
      p.base.norm_y_dev = (mu - mu_first).norm();
      p.base.grad_x_norm = g_v.norm();
      p.base.grad_y_norm = g_mu.norm();
      p.base.gap_running_avg = std::numeric_limits<double>::quiet_NaN();
      p.rho_gap = std::numeric_limits<double>::quiet_NaN();
      if (optimal != nullptr) {
        const GapIdentity id = duality_gap_identity(
            mdp, out.mu_avg, out.v_avg, extract_policy(mdp, out.mu_avg), *optimal);
        p.base.gap_running_avg = id.lhs;
        p.rho_gap = id.rhs;
      }
      p.queries = sim.query_count() - start_queries;
      out.trace.push_back(p);
      ++next_checkpoint;
    }
    v = std::move(v_next);
    mu = std::move(mu_next);
    if (!v.allFinite()) throw DomainError("v iterate became non-finite");
  }
  out.queries = sim.query_count() - start_queries;
  out.policy = extract_policy(mdp, out.mu_avg);
  return out;
}

GapIdentity duality_gap_identity(const TabularMdp& mdp, const VectorXd& mu_bar,
                                 const VectorXd& v_bar, const Policy& pi_bar,
                                 const OptimalSolution& optimal) {
  const ValueAndGain vg = gain_and_bias(mdp, pi_bar);
  GapIdentity out;
  out.lhs = lagrangian(mdp, optimal.mu, v_bar) - lagrangian(mdp, mu_bar, vg.v);
  out.rhs = optimal.rho - vg.rho;
  return out;
}

TabularMdp random_ergodic_mdp(int num_states, int num_actions, Rng& rng) {
  if (num_states < 1 || num_actions < 1) throw ParameterError("S and A must be positive");
  const Index pairs = static_cast<Index>(num_states) * num_actions;
  MatrixXd p(pairs, num_states);
  VectorXd r(pairs);
  const double floor = 0.01 / num_states;
  for (Index i = 0; i < pairs; ++i) {
    for (int j = 0; j < num_states; ++j) p(i, j) = standard_exponential(rng);
    p.row(i) /= p.row(i).sum();
    p.row(i).array() += floor;
    p.row(i) /= p.row(i).sum();
  }
  for (Index i = 0; i < pairs; ++i) r[i] = uniform01(rng);
  return TabularMdp::create(num_states, num_actions, std::move(r), std::move(p));
}

void write_mdp_trace_csv(std::ostream& out, const std::vector<MdpTracePoint>& trace) {
  out << "t,norm_x_dev,norm_y_dev,grad_x_norm,grad_y_norm,gap_running_avg,"
         "rho_gap,queries\n";
  char buf[320];
  for (const MdpTracePoint& p : trace) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld\n",
                  static_cast<long long>(p.base.t), p.base.norm_x_dev,
                  p.base.norm_y_dev, p.base.grad_x_norm, p.base.grad_y_norm,
                  p.base.gap_running_avg, p.rho_gap,
                  static_cast<long long>(p.queries));
    out << buf;
  }
}

}  // namespace sadpt
