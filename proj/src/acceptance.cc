#include "sadpt/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "sadpt/amdp.hpp"
#include "sadpt/errors.hpp"
#include "sadpt/geometry.hpp"
#include "sadpt/harness.hpp"
#include "sadpt/problems.hpp"
#include "sadpt/solvers.hpp"

namespace sadpt {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

BilinearGame rotation_game(const VectorXd& b, const VectorXd& c) {
  MatrixXd m(2, 2);
  m << 0, 1, -1, 0;
  return BilinearGame(m, b, c);
}

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// The stochastic gates share one 10x10 game with +-0.1 entrywise matrix noise.
BilinearGame noisy_reference_game() {
  Rng rng(20240611);
  return random_uniform_game(10, 10, rng);
}

NoiseModel reference_noise(const BilinearGame& game) {
  return NoiseModel::entrywise_matrix(game, 0.1, NoiseDistribution::kRademacher);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Comparators for the certified bound: the saddle and a few points around it.
std::vector<SaddlePoint> comparators_around(const SaddlePoint& s, Rng& rng, int extra) {
  std::vector<SaddlePoint> out{s};
  for (int k = 0; k < extra; ++k) {
    VectorXd dx(s.x.size()), dy(s.y.size());
    for (Index i = 0; i < dx.size(); ++i) dx[i] = uniform(rng, -1, 1);
    for (Index i = 0; i < dy.size(); ++i) dy[i] = uniform(rng, -1, 1);
    out.push_back({s.x + dx / dx.norm(), s.y + dy / dy.norm()});
  }
  return out;
}

CogdaSettings settings_of(const SolverParams& p) {
  return {p.eta_x, p.eta_y, p.rho_x, p.rho_y, p.horizon, p.x_init, p.y_init};
}

// --- 1 ---------------------------------------------------------------------
GateResult noiseless_theorem1() {
  GateResult r;
  const BilinearGame game = rotation_game(vec({1, 0}), vec({0, 2}));
  const NoiseModel noise = NoiseModel::noiseless(game);
  const SaddlePoint saddle = *exact_saddle(game);
  Rng rng(1);
  const std::vector<SaddlePoint> comps = comparators_around(saddle, rng, 4);
  bool ok = true;
  double worst_ratio = -1e300;
  double saddle_gap = 0.0;
  for (std::int64_t T : {1000, 10000, 100000}) {
    SolverParams p;
    p.horizon = T;
    p.x_init = VectorXd::Zero(2);
    p.y_init = VectorXd::Zero(2);
    tune_theorem1(1.0, T).apply_to(p);
    const RunResult run = cogda_run(game, noise, p, 0);
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const double gap = duality_gap(game, run.x_avg, run.y_avg, comps[k].x, comps[k].y);
      const double bound = theorem1_bound(game, noise, settings_of(p), comps[k].x, comps[k].y);
      if (k == 0) saddle_gap = std::max(saddle_gap, std::abs(gap));
      ok = ok && gap <= bound;
      worst_ratio = std::max(worst_ratio, gap / bound);
    }
  }
  r.passed = ok;
  r.detail = "max gap/bound over T and comparators " + num(worst_ratio) +
             ", |gap at saddle| " + num(saddle_gap);
  return r;
}

// --- 2 ---------------------------------------------------------------------
GateResult stochastic_theorem1() {
  GateResult r;
  const BilinearGame game = noisy_reference_game();
  const NoiseModel noise = reference_noise(game);
  const SaddlePoint saddle = *exact_saddle(game);
  Rng rng(2);
  const std::vector<SaddlePoint> comps = comparators_around(saddle, rng, 3);
  const std::int64_t T = 100000;
  SolverParams p;
  p.horizon = T;
  p.x_init = VectorXd::Zero(10);
  p.y_init = VectorXd::Zero(10);
  tune_theorem1(noise.L_M, T).apply_to(p);

  std::vector<std::vector<double>> gaps(comps.size());
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RunResult run = cogda_run(game, noise, p, seed);
    for (std::size_t k = 0; k < comps.size(); ++k) {
      gaps[k].push_back(duality_gap(game, run.x_avg, run.y_avg, comps[k].x, comps[k].y));
    }
  }
  bool ok = true;
  double worst_margin = -1e300;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    double mean = 0.0;
    for (double g : gaps[k]) mean += g;
    mean /= 20.0;
    double ss = 0.0;
    for (double g : gaps[k]) ss += (g - mean) * (g - mean);
    const double se = std::sqrt(ss / 19.0 / 20.0);
    const double bound = theorem1_bound(game, noise, settings_of(p), comps[k].x, comps[k].y);
    ok = ok && mean <= bound + 3.0 * se;
    worst_margin = std::max(worst_margin, (mean - 3.0 * se) / bound);
  }
  r.passed = ok;
  r.detail = "L_M=" + num(noise.L_M) + ", max (mean - 3se)/bound " + num(worst_margin);
  return r;
}

// --- 3 ---------------------------------------------------------------------
GateResult divergence_contrast() {
  GateResult r;
  const BilinearGame game = rotation_game(VectorXd::Zero(2), VectorXd::Zero(2));
  const NoiseModel noise = NoiseModel::noiseless(game);
  const std::int64_t T = 1000;
  SolverParams p;
  p.horizon = T;
  p.x_init = vec({1, 0});
  p.y_init = vec({1, 0});
  p.eta_x = p.eta_y = 0.1;
  p.keep_iterates = true;
  const RunResult sgda = sgda_run(game, noise, p, 0);
  const double z_sq = sgda.x_iterates.back().squaredNorm() + sgda.y_iterates.back().squaredNorm();
  const double expected = 2.0 * std::pow(1.01, static_cast<double>(T - 1));
  const double rel = std::abs(z_sq - expected) / expected;
  const double ratio = std::sqrt(z_sq / 2.0);

  SolverParams q = p;
  q.keep_iterates = false;
  tune_theorem1(1.0, T).apply_to(q);
  const RunResult cogda = cogda_run(game, noise, q, 0);
  const double cap = 10.0 * (std::sqrt(2.0) + 1.0);

  r.passed = rel <= 1e-6 && ratio > 100.0 && cogda.max_iterate_norm <= cap;
  r.detail = "SGDA ||z_1000||^2 rel err " + num(rel) + ", norm ratio " + num(ratio) +
             "; COGDA max norm " + num(cogda.max_iterate_norm) + " (cap " + num(cap) + ")";
  return r;
}

// --- 4 ---------------------------------------------------------------------
GateResult rate_shape() {
  GateResult r;
  const BilinearGame game = noisy_reference_game();
  ExperimentConfig cfg;
  cfg.scenario = Scenario::kBilinearCogda;
  cfg.bilinear = BilinearProblemSpec{game, reference_noise(game)};
  for (int k = 10; k <= 17; ++k) cfg.horizons.push_back(std::int64_t{1} << k);
  for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
  cfg.tuning = TuningKind::kTheorem1;
  cfg.checkpoints = {1};
  cfg.gap = {GapKind::kRestricted, 1.0};
  const SweepSummary summary = run_scenario(cfg);
  if (!summary.fit) {
    r.passed = false;
    r.detail = "no slope could be fitted";
    return r;
  }
  r.passed = summary.fit->slope <= -0.4;
  r.detail = "slope " + num(summary.fit->slope) + " over T=2^10..2^17 (restricted gap, radius 1)";
  return r;
}

// --- 5 ---------------------------------------------------------------------
GateResult cogda_comida_equivalence() {
  GateResult r;
  const BilinearGame game = noisy_reference_game();
  const NoiseModel noise = reference_noise(game);
  const SaddlePoint saddle = *exact_saddle(game);
  const std::int64_t T = 4096;
  SolverParams p;
  p.horizon = T;
  p.x_init = VectorXd::Zero(10);
  p.y_init = VectorXd::Zero(10);
  p.checkpoints = power_of_two_checkpoints(T);
  tune_theorem1(noise.L_M, T).apply_to(p);
  const GapEvaluator gap = restricted_gap(game, saddle.x, saddle.y, 1.0);
  const SubBilinearProblem problem =
      SubBilinearProblem::from_bilinear(game, noise, p.x_init, p.y_init);
  const GeometryPair geometry = GeometryPair::euclidean(10, 10);

  double worst = 0.0;
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunResult a = cogda_run(game, noise, p, seed, gap);
    const RunResult b = comida_run(problem, geometry, p, seed, gap);
    if (a.trace.size() != b.trace.size()) return {0, "", false, "trace lengths differ", 0};
    const auto diff = [&](double u, double v) {
      worst = std::max(worst, std::abs(u - v) / std::max(1.0, std::abs(u)));
    };
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      const TracePoint &u = a.trace[i], &v = b.trace[i];
      if (u.t != v.t) return {0, "", false, "checkpoint indices differ", 0};
      diff(u.norm_x_dev, v.norm_x_dev);
      diff(u.norm_y_dev, v.norm_y_dev);
      diff(u.grad_x_norm, v.grad_x_norm);
      diff(u.grad_y_norm, v.grad_y_norm);
      diff(u.gap_running_avg, v.gap_running_avg);
      ++compared;
    }
    diff((a.x_avg - b.x_avg).norm(), 0.0);
    diff((a.y_avg - b.y_avg).norm(), 0.0);
  }
  r.passed = worst <= 1e-10;
  r.detail = std::to_string(compared) + " checkpoints, max difference " + num(worst);
  return r;
}

// --- 6 ---------------------------------------------------------------------

// argmin_v 1/2 ||v - z||^2 + lambda ||v||_inf^2 by reduction to the scalar
// bound t = ||v||_inf: for fixed t the best v clips z to [-t, t], leaving the
// convex h(t) = 1/2 sum (|z_i| - t)_+^2 + lambda t^2 on [0, max |z_i|].
VectorXd brute_force_inf_prox(const VectorXd& z, double lambda) {
  const double top = z.cwiseAbs().maxCoeff();
  const auto h = [&](double t) {
    double s = 0.0;
    for (Index i = 0; i < z.size(); ++i) {
      const double e = std::max(std::abs(z[i]) - t, 0.0);
      s += e * e;
    }
    return 0.5 * s + lambda * t * t;
  };
  const int grid = 2000;
  int best = 0;
  for (int k = 1; k <= grid; ++k) {
    if (h(top * k / grid) < h(top * best / grid)) best = k;
  }
  double lo = top * std::max(best - 1, 0) / grid;
  double hi = top * std::min(best + 1, grid) / grid;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, top); ++it) {
    const double a = hi - phi * (hi - lo);
    const double b = lo + phi * (hi - lo);
    if (h(a) <= h(b)) hi = b;
    else lo = a;
  }
  const double t = 0.5 * (lo + hi);
  VectorXd v(z.size());
  for (Index i = 0; i < z.size(); ++i) v[i] = std::clamp(z[i], -t, t);
  return v;
}

GateResult prox_oracles() {
  GateResult r;
  Rng rng(6);
  double worst_prox = 0.0;
  int probe_failures = 0;
  int probes = 0;
  for (int dim = 1; dim <= 5; ++dim) {
    for (int k = 0; k < 100; ++k) {
      VectorXd current(dim), grad(dim);
      for (int i = 0; i < dim; ++i) {
        current[i] = uniform(rng, -3, 3);
        grad[i] = uniform(rng, -3, 3);
      }
      const double step = uniform(rng, 0.05, 2.0);
      const double weight = uniform(rng, 0.0, 3.0);
      const VectorXd fast = prox_inf_norm_squared_composite(current, grad, step, weight);
      const VectorXd brute = brute_force_inf_prox(current - step * grad, step * weight);
      worst_prox = std::max(worst_prox, (fast - brute).lpNorm<Eigen::Infinity>());

      const auto objective = [&](const VectorXd& v) {
        const double inf = v.lpNorm<Eigen::Infinity>();
        return v.dot(grad) + weight * inf * inf + (v - current).squaredNorm() / (2.0 * step);
      };
      const double f0 = objective(fast);
      for (int j = 0; j < 20; ++j) {
        VectorXd d(dim);
        for (int i = 0; i < dim; ++i) d[i] = uniform(rng, -1, 1);
        const double scale = std::pow(10.0, uniform(rng, -6, 0));
        ++probes;
        if (objective(fast + scale * d) < f0 - 1e-12 * std::max(1.0, std::abs(f0))) {
          ++probe_failures;
        }
      }
    }
  }

  double worst_sum = 0.0, worst_shift = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int dim = 2 + static_cast<int>(rng() % 9);
    VectorXd current(dim), grad(dim);
    for (int i = 0; i < dim; ++i) {
      current[i] = standard_exponential(rng);
      grad[i] = uniform(rng, -5, 5);
    }
    current /= current.sum();
    const double step = uniform(rng, 0.01, 3.0);
    const double shift = uniform(rng, -100, 100);
    const VectorXd a = prox_kl_simplex(current, grad, step);
    const VectorXd b = prox_kl_simplex(current, grad.array() + shift, step);
    worst_sum = std::max(worst_sum, std::abs(a.sum() - 1.0));
    worst_shift = std::max(worst_shift, (a - b).lpNorm<Eigen::Infinity>());
  }
  r.passed = worst_prox <= 1e-6 && probe_failures == 0 && worst_sum <= 1e-12 &&
             worst_shift <= 1e-12;
  r.detail = "inf-norm prox vs brute force " + num(worst_prox) + ", " +
             std::to_string(probe_failures) + "/" + std::to_string(probes) +
             " probes improved; KL sum err " + num(worst_sum) + ", shift err " +
             num(worst_shift);
  return r;
}

// --- 7 ---------------------------------------------------------------------
GateResult gap_identity() {
  GateResult r;
  double worst = 0.0;
  for (std::uint64_t k = 1; k <= 25; ++k) {
    Rng gen = Rng::stream(7, k);
    const TabularMdp mdp = random_ergodic_mdp(4, 3, gen);
    const OptimalSolution opt = optimal_policy_oracle(mdp);

    MdpRunParams params;
    params.horizon = 2000;
    params.apply(tune_theorem3(4, 3, params.horizon));
    GenerativeSimulator sim(mdp, k);
    Rng rng = Rng::stream(k, 0);
    const MdpRunResult run = comida_mdp_run(sim, params, rng);
    const GapIdentity a = duality_gap_identity(mdp, run.mu_avg, run.v_avg, run.policy, opt);
    worst = std::max(worst, std::abs(a.lhs - a.rhs));

    VectorXd mu(mdp.pairs()), v(mdp.S());
    for (Index i = 0; i < mu.size(); ++i) mu[i] = standard_exponential(gen);
    mu /= mu.sum();
    for (Index i = 0; i < v.size(); ++i) v[i] = uniform(gen, -5, 5);
    const GapIdentity b = duality_gap_identity(mdp, mu, v, extract_policy(mdp, mu), opt);
    worst = std::max(worst, std::abs(b.lhs - b.rhs));
  }
  r.passed = worst <= 1e-8;
  r.detail = "25 MDPs x 2 outputs, max |lhs - rhs| " + num(worst);
  return r;
}

// --- 8 ---------------------------------------------------------------------
GateResult planning_quality() {
  GateResult r;
  std::vector<double> short_gaps, long_gaps;
  for (std::uint64_t k = 1; k <= 10; ++k) {
    Rng gen(k);
    const TabularMdp mdp = random_ergodic_mdp(4, 2, gen);
    const OptimalSolution opt = optimal_policy_oracle(mdp);
    for (std::int64_t T : {std::int64_t{10000}, std::int64_t{200000}}) {
      MdpRunParams params;
      params.horizon = T;
      params.apply(tune_theorem3(4, 2, T));
      GenerativeSimulator sim(mdp, k);
      Rng rng = Rng::stream(k, 0);
      const MdpRunResult run = comida_mdp_run(sim, params, rng);
      const double gap = opt.rho - gain_and_bias(mdp, run.policy).rho;
      (T == 10000 ? short_gaps : long_gaps).push_back(gap);
    }
  }
  const double m_short = median(short_gaps), m_long = median(long_gaps);
  r.passed = m_long <= 0.1 && m_long < m_short;
  r.detail = "median suboptimality T=1e4: " + num(m_short) + ", T=2e5: " + num(m_long);
  return r;
}

// --- 9 ---------------------------------------------------------------------

// Per-coordinate Monte Carlo check: |mean - exact| <= 4 sd / sqrt(N).
struct MeanCheck {
  VectorXd sum, sum_sq;
  long n = 0;
  void add(const VectorXd& g) {
    if (n == 0) {
      sum = VectorXd::Zero(g.size());
      sum_sq = VectorXd::Zero(g.size());
    }
    sum += g;
    sum_sq += g.cwiseProduct(g);
    ++n;
  }
  // Largest |mean - exact| / (4 sd / sqrt(N)); zero-variance coordinates must
  // match to 1e-12.
  double worst_ratio(const VectorXd& exact) const {
    double worst = 0.0;
    const double dn = static_cast<double>(n);
    for (Index i = 0; i < exact.size(); ++i) {
      const double mean = sum[i] / dn;
      const double var = std::max(0.0, sum_sq[i] / dn - mean * mean) * dn / (dn - 1.0);
      const double err = std::abs(mean - exact[i]);
      const double tol = 4.0 * std::sqrt(var / dn);
      worst = std::max(worst, tol > 1e-12 ? err / tol : (err <= 1e-12 ? 0.0 : 1e300));
    }
    return worst;
  }
};

GateResult estimator_contracts() {
  GateResult r;
  const long N = 100000;
  Rng gen(9);
  const TabularMdp mdp = random_ergodic_mdp(4, 3, gen);
  VectorXd mu(mdp.pairs()), v(mdp.S());
  for (Index i = 0; i < mu.size(); ++i) mu[i] = standard_exponential(gen);
  mu /= mu.sum();
  for (Index i = 0; i < v.size(); ++i) v[i] = uniform(gen, -2, 2);

  GenerativeSimulator sim(mdp, 90);
  Rng rng(91);
  MeanCheck gv, gmu;
  bool caps = true;
  const double mu_cap = 1.0 + 2.0 * v.lpNorm<Eigen::Infinity>();
  for (long k = 0; k < N; ++k) {
    const VectorXd a = sample_grad_v(sim, mu, rng);
    caps = caps && a.squaredNorm() <= 2.0;
    gv.add(a);
    const VectorXd b = sample_grad_mu(sim, v, rng);
    caps = caps && b.lpNorm<Eigen::Infinity>() <= mu_cap;
    gmu.add(b);
  }
  const MatrixXd E = mdp.E();
  const double rv = gv.worst_ratio(mdp.P().transpose() * mu - E.transpose() * mu);
  const double rmu = gmu.worst_ratio(mdp.r() + mdp.P() * v - E * v);
  const bool counted = sim.query_count() == N * (mdp.pairs() + 1);

  const BilinearGame game = noisy_reference_game();
  const NoiseModel noise =
      NoiseModel::entrywise_matrix(game, 0.1, NoiseDistribution::kRademacher, 0.1, 0.1);
  VectorXd x(10), y(10);
  for (Index i = 0; i < 10; ++i) {
    x[i] = uniform(gen, -1, 1);
    y[i] = uniform(gen, -1, 1);
  }
  MeanCheck gx, gy;
  for (long k = 0; k < N; ++k) {
    Rng round = Rng::stream(92, static_cast<std::uint64_t>(k));
    const GradientSample s = sample_oracle(game, noise, x, y, round);
    gx.add(s.g_x_tilde);
    gy.add(s.g_y_tilde);
  }
  const Gradients exact = exact_gradients(game, x, y);
  const double rx = gx.worst_ratio(exact.g_x);
  const double ry = gy.worst_ratio(exact.g_y);

  MdpRunParams params;
  params.horizon = 1000;
  params.apply(tune_theorem3(mdp.S(), mdp.A(), params.horizon));
  GenerativeSimulator run_sim(mdp, 93);
  Rng run_rng(94);
  const MdpRunResult run = comida_mdp_run(run_sim, params, run_rng);
  const std::int64_t expected = params.horizon * (mdp.pairs() + 1);
  const bool run_counted = run.queries == expected && run_sim.query_count() == expected;

  const double worst = std::max({rv, rmu, rx, ry});
  r.passed = worst <= 1.0 && caps && counted && run_counted;
  r.detail = "max |mean-exact|/(4sd/sqrtN): g_v " + num(rv) + ", g_mu " + num(rmu) +
             ", g_x " + num(rx) + ", g_y " + num(ry) + "; caps " + (caps ? "ok" : "violated") +
             "; queries " + (counted && run_counted ? "exact" : "wrong");
  return r;
}

// --- 10 --------------------------------------------------------------------

// Gain of a deterministic policy by Cesaro-averaged power iteration.
double gain_by_power_iteration(const TabularMdp& mdp, const std::vector<int>& actions) {
  const int n = mdp.S();
  MatrixXd chain(n, n);
  VectorXd reward(n);
  for (int s = 0; s < n; ++s) {
    chain.row(s) = mdp.P().row(mdp.index(s, actions[static_cast<std::size_t>(s)]));
    reward[s] = mdp.r()[mdp.index(s, actions[static_cast<std::size_t>(s)])];
  }
  VectorXd dist = VectorXd::Constant(n, 1.0 / n);
  VectorXd avg = VectorXd::Zero(n);
  const int burn = 3000, keep = 2000;
  for (int k = 0; k < burn + keep; ++k) {
    dist = (dist.transpose() * chain).transpose();
    if (k >= burn) avg += dist;
  }
  return (avg / keep).dot(reward);
}

GateResult oracle_consistency() {
  GateResult r;
  // Stationary distribution and gain against a long simulated trajectory,
  // driven by a generator unrelated to the library's.
  Rng gen(10);
  const TabularMdp mdp = random_ergodic_mdp(4, 3, gen);
  Policy pi{MatrixXd(4, 3)};
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 3; ++a) pi.table(s, a) = standard_exponential(gen);
    pi.table.row(s) /= pi.table.row(s).sum();
  }
  const VectorXd nu = stationary_distribution(mdp, pi);
  const double rho = gain_and_bias(mdp, pi).rho;
  std::mt19937_64 eng(12345);
  std::vector<std::discrete_distribution<int>> act, next;
  const auto weights = [](const auto& row) {
    std::vector<double> w(static_cast<std::size_t>(row.size()));
    for (Index j = 0; j < row.size(); ++j) w[static_cast<std::size_t>(j)] = row(j);
    return w;
  };
  for (int s = 0; s < 4; ++s) {
    const std::vector<double> w = weights(pi.table.row(s));
    act.emplace_back(w.begin(), w.end());
  }
  for (Index i = 0; i < mdp.pairs(); ++i) {
    const std::vector<double> w = weights(mdp.P().row(i));
    next.emplace_back(w.begin(), w.end());
  }
  VectorXd visits = VectorXd::Zero(4);
  double reward = 0.0;
  const long steps = 1000000;
  int s = 0;
  for (long k = 0; k < steps; ++k) {
    visits[s] += 1.0;
    const int a = act[static_cast<std::size_t>(s)](eng);
    reward += mdp.r()[mdp.index(s, a)];
    s = next[static_cast<std::size_t>(mdp.index(s, a))](eng);
  }
  const double freq_err = (visits / steps - nu).lpNorm<Eigen::Infinity>();
  const double gain_err = std::abs(reward / steps - rho);

  // Bellman residuals on random instances and policies.
  double worst_residual = 0.0;
  for (int k = 0; k < 60; ++k) {
    const int S = 1 + k % 8, A = 1 + k % 4;
    const TabularMdp m = random_ergodic_mdp(S, A, gen);
    Policy p{MatrixXd(S, A)};
    for (int i = 0; i < S; ++i) {
      for (int j = 0; j < A; ++j) p.table(i, j) = standard_exponential(gen);
      p.table.row(i) /= p.table.row(i).sum();
    }
    worst_residual = std::max(worst_residual, gain_and_bias(m, p).bellman_residual);
  }

  // Planning oracle and policy iteration against independent enumeration.
  const std::vector<std::pair<int, int>> shapes = {{1, 2}, {2, 2}, {3, 2}, {4, 2}, {8, 2},
                                                   {2, 3}, {3, 3}, {4, 3}, {5, 3}, {2, 4},
                                                   {4, 4}, {3, 5}, {2, 16}, {1, 256}};
  double worst_planning = 0.0;
  int instances = 0;
  for (const auto& [S, A] : shapes) {
    for (int rep = 0; rep < 3; ++rep) {
      const TabularMdp m = random_ergodic_mdp(S, A, gen);
      double best = -1.0;
      std::vector<int> actions(static_cast<std::size_t>(S), 0);
      while (true) {
        best = std::max(best, gain_by_power_iteration(m, actions));
        int i = 0;
        while (i < S && ++actions[static_cast<std::size_t>(i)] == A) {
          actions[static_cast<std::size_t>(i)] = 0;
          ++i;
        }
        if (i == S) break;
      }
      const OptimalSolution enumerated = optimal_policy_oracle(m);
      PlanningOptions pi_only;
      pi_only.enumeration_limit = 0;
      pi_only.allow_policy_iteration = true;
      const OptimalSolution iterated = optimal_policy_oracle(m, pi_only);
      worst_planning = std::max({worst_planning, std::abs(enumerated.rho - best),
                                 std::abs(iterated.rho - best),
                                 std::abs(gain_by_power_iteration(m, enumerated.actions) - best)});
      ++instances;
    }
  }
  r.passed = freq_err <= 1e-2 && gain_err <= 1e-2 && worst_residual <= 1e-10 &&
             worst_planning <= 1e-8;
  r.detail = "visit freq err " + num(freq_err) + ", gain err " + num(gain_err) +
             ", Bellman residual " + num(worst_residual) + ", planning err " +
             num(worst_planning) + " on " + std::to_string(instances) + " MDPs";
  return r;
}

using GateFn = GateResult (*)();

const std::vector<GateFn>& gate_functions() {
  static const std::vector<GateFn> fns = {
      noiseless_theorem1,  stochastic_theorem1, divergence_contrast, rate_shape,
      cogda_comida_equivalence, prox_oracles, gap_identity, planning_quality,
      estimator_contracts, oracle_consistency};
  return fns;
}

}  // namespace

const std::vector<std::string>& gate_names() {
  static const std::vector<std::string> names = {
      "noiseless-theorem1", "stochastic-theorem1", "divergence-contrast",
      "rate-shape",         "cogda-comida-equivalence", "prox-oracles",
      "gap-identity",       "planning-quality",    "estimator-contracts",
      "oracle-consistency"};
  return names;
}

GateResult run_gate(int criterion) {
  if (criterion < 1 || criterion > static_cast<int>(gate_functions().size())) {
    throw ConfigurationError("no gate for criterion " + std::to_string(criterion));
  }
  const auto start = std::chrono::steady_clock::now();
  GateResult r;
  try {
    r = gate_functions()[static_cast<std::size_t>(criterion - 1)]();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("threw: ") + e.what();
  }
  r.criterion = criterion;
  r.name = gate_names()[static_cast<std::size_t>(criterion - 1)];
  r.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<GateResult> run_gate_suite(const std::string& suite) {
  std::vector<GateResult> out;
  if (suite == "all") {
    for (int k = 1; k <= static_cast<int>(gate_names().size()); ++k) out.push_back(run_gate(k));
    return out;
  }
  const auto& names = gate_names();
  const auto it = std::find(names.begin(), names.end(), suite);
  if (it == names.end()) throw ConfigurationError("unknown gate suite \"" + suite + "\"");
  out.push_back(run_gate(static_cast<int>(it - names.begin()) + 1));
  return out;
}

std::string format_gate_line(const GateResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "%s %2d %-25s (%7.2f s) ", r.passed ? "PASS" : "FAIL",
                r.criterion, r.name.c_str(), r.seconds);
  return head + r.detail;
}

}  // namespace sadpt
