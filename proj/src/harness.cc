#include "sadpt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sadpt/errors.hpp"
#include "sadpt/solvers.hpp"

namespace sadpt {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& what) {
  throw ConfigurationError(what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
  if (!obj.is_object()) config_error(context + " must be a JSON object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) config_error("unknown field \"" + item.key() + "\" in " + context);
  }
}

const json& require(const json& obj, const char* key, const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    config_error("missing field \"" + std::string(key) + "\" in " + context);
  }
  return *it;
}

double as_double(const json& j, const std::string& what) {
  if (!j.is_number()) config_error(what + " must be a number");
  return j.get<double>();
}

std::int64_t as_int(const json& j, const std::string& what) {
  if (!j.is_number_integer()) config_error(what + " must be an integer");
  return j.get<std::int64_t>();
}

VectorXd as_vector(const json& j, const std::string& what) {
  if (!j.is_array()) config_error(what + " must be an array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Index>(i)] = as_double(j[i], what + "[" + std::to_string(i) + "]");
  }
  return v;
}

// Either a flat row-major list or a list of rows.
MatrixXd as_matrix(const json& j, Index rows, Index cols, const std::string& what) {
  if (!j.is_array()) config_error(what + " must be an array");
  MatrixXd m(rows, cols);
  if (!j.empty() && j[0].is_array()) {
    if (static_cast<Index>(j.size()) != rows) {
      config_error(what + " must have " + std::to_string(rows) + " rows");
    }
    for (Index i = 0; i < rows; ++i) {
      const VectorXd row = as_vector(j[static_cast<std::size_t>(i)], what);
      if (row.size() != cols) {
        config_error(what + " rows must have " + std::to_string(cols) + " entries");
      }
      m.row(i) = row.transpose();
    }
    return m;
  }
  const VectorXd flat = as_vector(j, what);
  if (flat.size() != rows * cols) {
    config_error(what + " must have " + std::to_string(rows * cols) + " entries");
  }
  for (Index i = 0; i < rows; ++i) {
    for (Index k = 0; k < cols; ++k) m(i, k) = flat[i * cols + k];
  }
  return m;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    config_error("malformed " + what + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

NoiseDistribution parse_distribution(const json& j) {
  const std::string d = j.is_string() ? j.get<std::string>() : "";
  if (d == "rademacher") return NoiseDistribution::kRademacher;
  if (d == "uniform") return NoiseDistribution::kUniform;
  config_error("noise.distribution must be \"rademacher\" or \"uniform\"");
}

BilinearProblemSpec bilinear_from_json(const json& doc) {
  const std::string ctx = "problem";
  check_keys(doc, {"m", "n", "M", "b", "c", "noise", "generate"}, ctx);
  const std::int64_t m = as_int(require(doc, "m", ctx), "m");
  const std::int64_t n = as_int(require(doc, "n", ctx), "n");
  if (m < 1 || n < 1) config_error("m and n must be positive");

  std::optional<BilinearGame> game;
  if (doc.contains("generate")) {
    if (doc.contains("M") || doc.contains("b") || doc.contains("c")) {
      config_error("problem takes either \"generate\" or explicit M, b, c");
    }
    const json& g = doc["generate"];
    check_keys(g, {"seed", "low", "high"}, "problem.generate");
    Rng rng(static_cast<std::uint64_t>(as_int(require(g, "seed", "problem.generate"), "seed")));
    const double lo = g.contains("low") ? as_double(g["low"], "low") : -1.0;
    const double hi = g.contains("high") ? as_double(g["high"], "high") : 1.0;
    game.emplace(random_uniform_game(m, n, rng, lo, hi));
  } else {
    try {
      game.emplace(as_matrix(require(doc, "M", ctx), m, n, "M"),
                   as_vector(require(doc, "b", ctx), "b"),
                   as_vector(require(doc, "c", ctx), "c"));
    } catch (const Error& e) {
      config_error(std::string("invalid game: ") + e.what());
    }
  }

  NoiseModel noise = NoiseModel::noiseless(*game);
  if (doc.contains("noise")) {
    const json& nz = doc["noise"];
    const std::string nctx = "problem.noise";
    check_keys(nz, {"kind", "distribution", "amplitudes", "shared_matrix", "L_M", "L_b", "L_c"},
               nctx);
    const json& kind_j = require(nz, "kind", nctx);
    const std::string kind = kind_j.is_string() ? kind_j.get<std::string>() : "";
    const NoiseDistribution dist = nz.contains("distribution")
                                       ? parse_distribution(nz["distribution"])
                                       : NoiseDistribution::kRademacher;
    double a = 0.0, ab = 0.0, ac = 0.0;
    if (nz.contains("amplitudes")) {
      const json& amp = nz["amplitudes"];
      check_keys(amp, {"matrix", "b", "c"}, "problem.noise.amplitudes");
      if (amp.contains("matrix")) a = as_double(amp["matrix"], "amplitudes.matrix");
      if (amp.contains("b")) ab = as_double(amp["b"], "amplitudes.b");
      if (amp.contains("c")) ac = as_double(amp["c"], "amplitudes.c");
    }
    if (a < 0.0 || ab < 0.0 || ac < 0.0) config_error("noise amplitudes must be >= 0");
    if (kind == "noiseless") {
      if (a != 0.0 || ab != 0.0 || ac != 0.0) {
        config_error("noiseless noise takes no amplitudes");
      }
    } else if (kind == "entrywise_matrix") {
      noise = NoiseModel::entrywise_matrix(*game, a, dist, ab, ac);
    } else if (kind == "entrywise_vector") {
      if (a != 0.0) config_error("entrywise_vector noise takes no matrix amplitude");
      noise = NoiseModel::entrywise_vector(*game, ab, ac, dist);
    } else {
      config_error(
          "noise.kind must be \"noiseless\", \"entrywise_matrix\" or \"entrywise_vector\"");
    }
    if (nz.contains("shared_matrix")) {
      if (!nz["shared_matrix"].is_boolean()) config_error("shared_matrix must be a boolean");
      noise.shared_matrix = nz["shared_matrix"].get<bool>();
    }
    // Declared constants may be looser than the certified ones, never tighter.
    const auto declared = [&](const char* key, double& value) {
      if (!nz.contains(key)) return;
      const double d = as_double(nz[key], key);
      if (d < value * (1.0 - 1e-12)) {
        config_error(std::string(key) + " is below the certified value " +
                     std::to_string(value));
      }
      value = d;
    };
    declared("L_M", noise.L_M);
    declared("L_b", noise.L_b);
    declared("L_c", noise.L_c);
  }
  return {std::move(*game), noise};
}

TabularMdp mdp_from_json(const json& doc) {
  const std::string ctx = "problem";
  check_keys(doc, {"S", "A", "r", "P", "generate"}, ctx);
  const std::int64_t s = as_int(require(doc, "S", ctx), "S");
  const std::int64_t a = as_int(require(doc, "A", ctx), "A");
  if (s < 1 || a < 1) config_error("S and A must be positive");
  try {
    if (doc.contains("generate")) {
      if (doc.contains("r") || doc.contains("P")) {
        config_error("problem takes either \"generate\" or explicit r, P");
      }
      const json& g = doc["generate"];
      check_keys(g, {"seed"}, "problem.generate");
      Rng rng(static_cast<std::uint64_t>(as_int(require(g, "seed", "problem.generate"), "seed")));
      return random_ergodic_mdp(static_cast<int>(s), static_cast<int>(a), rng);
    }
    const Index pairs = static_cast<Index>(s * a);
    return TabularMdp::create(static_cast<int>(s), static_cast<int>(a),
                              as_vector(require(doc, "r", ctx), "r"),
                              as_matrix(require(doc, "P", ctx), pairs, s, "P"));
  } catch (const ConfigurationError&) {
    throw;
  } catch (const Error& e) {
    config_error(std::string("invalid MDP: ") + e.what());
  }
}

Scenario parse_scenario(const json& j) {
  const std::string s = j.is_string() ? j.get<std::string>() : "";
  if (s == "BilinearCogda") return Scenario::kBilinearCogda;
  if (s == "BilinearComida") return Scenario::kBilinearComida;
  if (s == "BilinearSgdaContrast") return Scenario::kBilinearSgdaContrast;
  if (s == "AmdpPlan") return Scenario::kAmdpPlan;
  config_error(
      "scenario must be one of BilinearCogda, BilinearComida, "
      "BilinearSgdaContrast, AmdpPlan");
}

void parse_tuning(const json& j, ExperimentConfig& cfg) {
  if (j.is_string()) {
    const std::string t = j.get<std::string>();
    if (t == "Theorem1") cfg.tuning = TuningKind::kTheorem1;
    else if (t == "Corollary1") cfg.tuning = TuningKind::kCorollary1;
    else if (t == "Theorem3") cfg.tuning = TuningKind::kTheorem3;
    else config_error("tuning must be Theorem1, Corollary1, Theorem3 or {\"Manual\": {...}}");
    return;
  }
  check_keys(j, {"Manual"}, "tuning");
  const json& m = require(j, "Manual", "tuning");
  check_keys(m, {"eta_x", "eta_y", "rho_x", "rho_y", "eta_v", "eta_mu", "rho_v"},
             "tuning.Manual");
  cfg.tuning = TuningKind::kManual;
  const auto get = [&](const char* key, std::optional<double>& dst) {
    if (m.contains(key)) dst = as_double(m[key], std::string("tuning.Manual.") + key);
  };
  get("eta_x", cfg.manual.eta_x);
  get("eta_y", cfg.manual.eta_y);
  get("rho_x", cfg.manual.rho_x);
  get("rho_y", cfg.manual.rho_y);
  get("eta_v", cfg.manual.eta_v);
  get("eta_mu", cfg.manual.eta_mu);
  get("rho_v", cfg.manual.rho_v);
}

void check_tuning(const ExperimentConfig& cfg) {
  const bool bilinear = cfg.scenario != Scenario::kAmdpPlan;
  const char* scenario_name[] = {"BilinearCogda", "BilinearComida",
                                 "BilinearSgdaContrast", "AmdpPlan"};
  const std::string name = scenario_name[static_cast<int>(cfg.scenario)];
  const auto mismatch = [&](const char* tuning) {
    config_error(std::string("tuning ") + tuning + " does not apply to scenario " + name);
  };
  switch (cfg.tuning) {
    case TuningKind::kTheorem1:
      if (cfg.scenario != Scenario::kBilinearCogda) mismatch("Theorem1");
      return;
    case TuningKind::kCorollary1:
      if (cfg.scenario != Scenario::kBilinearComida) mismatch("Corollary1");
      return;
    case TuningKind::kTheorem3:
      if (cfg.scenario != Scenario::kAmdpPlan) mismatch("Theorem3");
      return;
    case TuningKind::kManual:
      break;
  }
  const ManualTuning& m = cfg.manual;
  const auto need = [&](const std::optional<double>& v, const char* key) {
    if (!v) config_error(std::string("Manual tuning for ") + name + " needs " + key);
  };
  const auto forbid = [&](const std::optional<double>& v, const char* key) {
    if (v) config_error(std::string("Manual tuning for ") + name + " does not take " + key);
  };
  if (bilinear) {
    need(m.eta_x, "eta_x");
    need(m.eta_y, "eta_y");
    if (cfg.scenario == Scenario::kBilinearSgdaContrast) {
      forbid(m.rho_x, "rho_x");
      forbid(m.rho_y, "rho_y");
    } else {
      need(m.rho_x, "rho_x");
      need(m.rho_y, "rho_y");
    }
    forbid(m.eta_v, "eta_v");
    forbid(m.eta_mu, "eta_mu");
    forbid(m.rho_v, "rho_v");
  } else {
    need(m.eta_v, "eta_v");
    need(m.eta_mu, "eta_mu");
    need(m.rho_v, "rho_v");
    forbid(m.eta_x, "eta_x");
    forbid(m.eta_y, "eta_y");
    forbid(m.rho_x, "rho_x");
    forbid(m.rho_y, "rho_y");
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<std::int64_t> cell_checkpoints(const ExperimentConfig& cfg, std::int64_t T) {
  if (cfg.checkpoints.empty()) return power_of_two_checkpoints(T);
  std::vector<std::int64_t> out;
  for (std::int64_t c : cfg.checkpoints) {
    if (c >= 1 && c <= T) out.push_back(c);
  }
  out.push_back(T);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct CellOutput {
  CellResult result;
  std::string trace_csv;
  std::string baseline_csv;
};

GapEvaluator bilinear_gap(const ExperimentConfig& cfg, const BilinearGame& game,
                          const VectorXd& x1, const VectorXd& y1) {
  const std::optional<SaddlePoint> saddle = exact_saddle(game);
  if (cfg.gap.kind == GapKind::kSaddle) {
    if (!saddle) config_error("gap kind \"saddle\" needs a square invertible M");
    return comparator_gap(game, saddle->x, saddle->y);
  }
  return saddle ? restricted_gap(game, saddle->x, saddle->y, cfg.gap.radius)
                : restricted_gap(game, x1, y1, cfg.gap.radius);
}

CellOutput run_bilinear_cell(const ExperimentConfig& cfg, std::int64_t T,
                             std::uint64_t seed) {
  const BilinearGame& game = cfg.bilinear->game;
  const NoiseModel& noise = cfg.bilinear->noise;
  SolverParams params;
  params.horizon = T;
  params.x_init = cfg.x_init.size() ? cfg.x_init : VectorXd::Zero(game.dim_x());
  params.y_init = cfg.y_init.size() ? cfg.y_init : VectorXd::Zero(game.dim_y());
  params.checkpoints = cell_checkpoints(cfg, T);
  if (cfg.tuning == TuningKind::kManual) {
    params.eta_x = *cfg.manual.eta_x;
    params.eta_y = *cfg.manual.eta_y;
    params.rho_x = cfg.manual.rho_x.value_or(0.0);
    params.rho_y = cfg.manual.rho_y.value_or(0.0);
  }
  const GapEvaluator gap = bilinear_gap(cfg, game, params.x_init, params.y_init);

  CellOutput out;
  RunResult run;
  switch (cfg.scenario) {
    case Scenario::kBilinearCogda:
      if (cfg.tuning == TuningKind::kTheorem1) tune_theorem1(noise.L_M, T).apply_to(params);
      run = cogda_run(game, noise, params, seed, gap);
      break;
    case Scenario::kBilinearComida: {
      const SubBilinearProblem problem =
          SubBilinearProblem::from_bilinear(game, noise, params.x_init, params.y_init);
      if (cfg.tuning == TuningKind::kCorollary1) {
        tune_corollary1(problem.L, 1.0, 1.0, T).apply_to(params);
      }
      run = comida_run(problem, GeometryPair::euclidean(game.dim_x(), game.dim_y()),
                       params, seed, gap);
      break;
    }
    case Scenario::kBilinearSgdaContrast: {
      run = sgda_run(game, noise, params, seed, gap);
      SolverParams baseline = params;
      tune_theorem1(noise.L_M, T).apply_to(baseline);
      const RunResult stabilized = cogda_run(game, noise, baseline, seed, gap);
      out.result.baseline_max_norm = stabilized.max_iterate_norm;
      std::ostringstream b;
      write_trace_csv(b, stabilized.trace);
      out.baseline_csv = b.str();
      break;
    }
    case Scenario::kAmdpPlan:
      break;
  }
  out.result.horizon = T;
  out.result.seed = seed;
  out.result.value = run.trace.back().gap_running_avg;
  out.result.max_iterate_norm = run.max_iterate_norm;
  out.result.queries = run.queries;
  std::ostringstream t;
  write_trace_csv(t, run.trace);
  out.trace_csv = t.str();
  return out;
}

CellOutput run_amdp_cell(const ExperimentConfig& cfg, const OptimalSolution& optimal,
                         std::int64_t T, std::uint64_t seed) {
  const TabularMdp& mdp = *cfg.amdp.mdp;
  MdpRunParams params;
  params.horizon = T;
  params.mu_init = cfg.mu_init;
  params.checkpoints = cell_checkpoints(cfg, T);
  if (cfg.tuning == TuningKind::kTheorem3) {
    params.apply(tune_theorem3(mdp.S(), mdp.A(), T));
  } else {
    params.eta_v = *cfg.manual.eta_v;
    params.eta_mu = *cfg.manual.eta_mu;
    params.rho_v = *cfg.manual.rho_v;
  }
  GenerativeSimulator sim(mdp, seed);
  Rng rng = Rng::stream(seed, 0);
  const MdpRunResult run = comida_mdp_run(sim, params, rng, &optimal);

  CellOutput out;
  out.result.horizon = T;
  out.result.seed = seed;
  out.result.value = run.trace.back().rho_gap;
  out.result.max_iterate_norm = run.max_v_inf;
  out.result.queries = run.queries;
  out.result.bias_span = gain_and_bias(mdp, run.policy).span;
  std::ostringstream t;
  write_mdp_trace_csv(t, run.trace);
  out.trace_csv = t.str();
  return out;
}

unsigned thread_count(std::size_t cells) {
  unsigned n = 1;
  if (const char* env = std::getenv("SADPT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(cells, 1)));
}

}  // namespace

BilinearProblemSpec parse_bilinear_problem(const std::string& json_text) {
  return bilinear_from_json(parse_json(json_text, "problem document"));
}

TabularMdp parse_mdp(const std::string& json_text) {
  return mdp_from_json(parse_json(json_text, "MDP document"));
}

std::string game_to_json(const BilinearProblemSpec& spec) {
  const BilinearGame& g = spec.game;
  json doc;
  doc["m"] = g.dim_x();
  doc["n"] = g.dim_y();
  json flat = json::array();
  for (Index i = 0; i < g.dim_x(); ++i) {
    for (Index j = 0; j < g.dim_y(); ++j) flat.push_back(g.M()(i, j));
  }
  doc["M"] = flat;
  doc["b"] = vector_json(g.b());
  doc["c"] = vector_json(g.c());
  const NoiseModel& nz = spec.noise;
  json noise;
  switch (nz.kind) {
    case NoiseKind::kNoiseless: noise["kind"] = "noiseless"; break;
    case NoiseKind::kEntrywiseBoundedMatrix: noise["kind"] = "entrywise_matrix"; break;
    case NoiseKind::kEntrywiseVectorNoise: noise["kind"] = "entrywise_vector"; break;
  }
  noise["distribution"] =
      nz.distribution == NoiseDistribution::kRademacher ? "rademacher" : "uniform";
  json amplitudes;
  if (nz.kind != NoiseKind::kEntrywiseVectorNoise) amplitudes["matrix"] = nz.matrix_amplitude;
  amplitudes["b"] = nz.b_amplitude;
  amplitudes["c"] = nz.c_amplitude;
  noise["amplitudes"] = amplitudes;
  noise["shared_matrix"] = nz.shared_matrix;
  noise["L_M"] = nz.L_M;
  noise["L_b"] = nz.L_b;
  noise["L_c"] = nz.L_c;
  doc["noise"] = noise;
  return doc.dump(2);
}

std::string mdp_to_json(const TabularMdp& mdp) {
  json doc;
  doc["S"] = mdp.S();
  doc["A"] = mdp.A();
  doc["r"] = vector_json(mdp.r());
  json rows = json::array();
  for (Index i = 0; i < mdp.pairs(); ++i) rows.push_back(vector_json(mdp.P().row(i).transpose()));
  doc["P"] = rows;
  return doc.dump(2);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  const json doc = parse_json(text, "configuration");
  check_keys(doc,
             {"scenario", "problem", "problem_file", "horizons", "seeds", "tuning",
              "output", "checkpoints", "gap", "x_init", "y_init", "mu_init"},
             "configuration");
  ExperimentConfig cfg;
  cfg.scenario = parse_scenario(require(doc, "scenario", "configuration"));

  json problem;
  if (doc.contains("problem") == doc.contains("problem_file")) {
    config_error("configuration needs exactly one of \"problem\" and \"problem_file\"");
  }
  if (doc.contains("problem")) {
    problem = doc["problem"];
  } else {
    if (!doc["problem_file"].is_string()) config_error("problem_file must be a string");
    fs::path p = doc["problem_file"].get<std::string>();
    if (p.is_relative()) p = fs::path(base_dir) / p;
    problem = parse_json(read_file(p.string()), "problem file " + p.string());
  }
  if (cfg.scenario == Scenario::kAmdpPlan) {
    cfg.amdp.mdp.emplace(mdp_from_json(problem));
  } else {
    cfg.bilinear.emplace(bilinear_from_json(problem));
  }

  const json& horizons = require(doc, "horizons", "configuration");
  if (!horizons.is_array() || horizons.empty()) config_error("horizons must be a nonempty array");
  for (const json& h : horizons) {
    const std::int64_t T = as_int(h, "horizons entry");
    if (T < 1) config_error("horizons entries must be >= 1");
    cfg.horizons.push_back(T);
  }
  const json& seeds = require(doc, "seeds", "configuration");
  if (!seeds.is_array() || seeds.empty()) config_error("seeds must be a nonempty array");
  for (const json& s : seeds) {
    const std::int64_t v = as_int(s, "seeds entry");
    if (v < 0) config_error("seeds entries must be nonnegative");
    cfg.seeds.push_back(static_cast<std::uint64_t>(v));
  }
  parse_tuning(require(doc, "tuning", "configuration"), cfg);
  check_tuning(cfg);

  if (doc.contains("output")) {
    if (!doc["output"].is_string()) config_error("output must be a string");
    cfg.output = doc["output"].get<std::string>();
  }
  if (doc.contains("checkpoints")) {
    const json& c = doc["checkpoints"];
    if (!c.is_array()) config_error("checkpoints must be an array");
    for (const json& v : c) {
      const std::int64_t t = as_int(v, "checkpoints entry");
      if (t < 1) config_error("checkpoints entries must be >= 1");
      cfg.checkpoints.push_back(t);
    }
  }
  if (doc.contains("gap")) {
    if (cfg.scenario == Scenario::kAmdpPlan) config_error("gap does not apply to AmdpPlan");
    const json& g = doc["gap"];
    check_keys(g, {"kind", "radius"}, "gap");
    const std::string kind =
        g.contains("kind") && g["kind"].is_string() ? g["kind"].get<std::string>() : "restricted";
    if (kind == "saddle") cfg.gap.kind = GapKind::kSaddle;
    else if (kind == "restricted") cfg.gap.kind = GapKind::kRestricted;
    else config_error("gap.kind must be \"saddle\" or \"restricted\"");
    if (g.contains("radius")) {
      cfg.gap.radius = as_double(g["radius"], "gap.radius");
      if (!(cfg.gap.radius >= 0.0)) config_error("gap.radius must be >= 0");
    }
  }
  const auto initial = [&](const char* key, VectorXd& dst, Index size, bool applies) {
    if (!doc.contains(key)) return;
    if (!applies) config_error(std::string(key) + " does not apply to this scenario");
    dst = as_vector(doc[key], key);
    if (dst.size() != size) {
      config_error(std::string(key) + " must have " + std::to_string(size) + " entries");
    }
  };
  const bool bilinear = cfg.scenario != Scenario::kAmdpPlan;
  initial("x_init", cfg.x_init, bilinear ? cfg.bilinear->game.dim_x() : 0, bilinear);
  initial("y_init", cfg.y_init, bilinear ? cfg.bilinear->game.dim_y() : 0, bilinear);
  initial("mu_init", cfg.mu_init, bilinear ? 0 : cfg.amdp.mdp->pairs(), !bilinear);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  return parse_config_text(read_file(path), fs::path(path).parent_path().string());
}

RateFit fit_rate_slope(const std::vector<std::pair<double, double>>& points) {
  RateFit fit;
  std::vector<double> xs, ys;
  for (const auto& [t, gap] : points) {
    if (!(gap > 0.0) || !std::isfinite(gap) || !(t > 0.0)) {
      fit.warnings.push_back("dropped point T=" + fmt(t) + " with gap " + fmt(gap));
      continue;
    }
    xs.push_back(std::log(t));
    ys.push_back(std::log(gap));
  }
  if (xs.size() < 3) {
    throw ParameterError("rate fit needs at least 3 points with positive gap, got " +
                         std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw ParameterError("rate fit needs at least two distinct horizons");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.used = xs.size();
  return fit;
}

SweepSummary run_scenario(const ExperimentConfig& cfg) {
  if (cfg.horizons.empty() || cfg.seeds.empty()) {
    config_error("horizons and seeds must be nonempty");
  }
  const bool amdp = cfg.scenario == Scenario::kAmdpPlan;
  if (amdp ? !cfg.amdp.mdp : !cfg.bilinear) config_error("configuration has no problem");

  std::optional<OptimalSolution> optimal;
  if (amdp) {
    PlanningOptions options;
    options.allow_policy_iteration = true;
    optimal = optimal_policy_oracle(*cfg.amdp.mdp, options);
  }

  struct Cell {
    std::int64_t T;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::int64_t T : cfg.horizons) {
    for (std::uint64_t seed : cfg.seeds) cells.push_back({T, seed});
  }

  if (!cfg.output.empty()) fs::create_directories(cfg.output);
  std::vector<CellOutput> outputs(cells.size());
  std::vector<std::exception_ptr> failures(cells.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        outputs[i] = amdp ? run_amdp_cell(cfg, *optimal, cells[i].T, cells[i].seed)
                          : run_bilinear_cell(cfg, cells[i].T, cells[i].seed);
        if (!cfg.output.empty()) {
          const std::string stem =
              "_T" + std::to_string(cells[i].T) + "_seed" + std::to_string(cells[i].seed) + ".csv";
          write_atomically(fs::path(cfg.output) / ("trace" + stem), outputs[i].trace_csv);
          if (!outputs[i].baseline_csv.empty()) {
            write_atomically(fs::path(cfg.output) / ("baseline" + stem),
                             outputs[i].baseline_csv);
          }
        }
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = thread_count(cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : failures) {
    if (e) std::rethrow_exception(e);
  }

  SweepSummary summary;
  std::map<std::int64_t, std::vector<double>> by_horizon;
  for (const CellOutput& o : outputs) {
    summary.cells.push_back(o.result);
    by_horizon[o.result.horizon].push_back(o.result.value);
  }
  for (const auto& [T, values] : by_horizon) {
    HorizonStat st;
    st.horizon = T;
    st.count = values.size();
    for (double v : values) st.mean += v;
    st.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - st.mean) * (v - st.mean);
      st.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) /
                               static_cast<double>(values.size()));
    }
    summary.per_horizon.push_back(st);
  }
  if (summary.per_horizon.size() >= 3) {
    std::vector<std::pair<double, double>> points;
    for (const HorizonStat& st : summary.per_horizon) {
      points.emplace_back(static_cast<double>(st.horizon), st.mean);
    }
    try {
      summary.fit = fit_rate_slope(points);
      for (const std::string& w : summary.fit->warnings) summary.warnings.push_back(w);
    } catch (const ParameterError& e) {
      summary.warnings.push_back(std::string("no rate fit: ") + e.what());
    }
  }

  if (!cfg.output.empty()) {
    std::string runs =
        "T,seed,value,max_iterate_norm,queries,baseline_max_norm,bias_span\n";
    for (const CellResult& c : summary.cells) {
      runs += std::to_string(c.horizon) + "," + std::to_string(c.seed) + "," + fmt(c.value) +
              "," + fmt(c.max_iterate_norm) + "," + std::to_string(c.queries) + "," +
              fmt(c.baseline_max_norm) + "," + fmt(c.bias_span) + "\n";
    }
    write_atomically(fs::path(cfg.output) / "runs.csv", runs);
    std::string sum = "T,mean,stderr,count\n";
    for (const HorizonStat& st : summary.per_horizon) {
      sum += std::to_string(st.horizon) + "," + fmt(st.mean) + "," + fmt(st.std_error) +
             "," + std::to_string(st.count) + "\n";
    }
    write_atomically(fs::path(cfg.output) / "summary.csv", sum);
    const fs::path fit_path = fs::path(cfg.output) / "fit.csv";
    if (summary.fit) {
      write_atomically(fit_path, "slope,intercept,points\n" + fmt(summary.fit->slope) + "," +
                                     fmt(summary.fit->intercept) + "," +
                                     std::to_string(summary.fit->used) + "\n");
    } else if (fs::exists(fit_path)) {
      fs::remove(fit_path);
    }
  }
  for (const std::string& w : summary.warnings) std::cerr << "warning: " << w << "\n";
  return summary;
}

std::string print_tuning(const std::string& theorem, const std::vector<std::string>& params) {
  std::map<std::string, double> kv;
  for (const std::string& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) config_error("parameter \"" + p + "\" is not key=value");
    const std::string key = p.substr(0, eq);
    char* end = nullptr;
    const std::string text = p.substr(eq + 1);
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0') config_error("parameter " + key + " is not a number");
    kv[key] = value;
  }
  const auto take = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) config_error(theorem + " needs parameter " + key);
    const double v = it->second;
    kv.erase(it);
    return v;
  };
  const auto horizon = [&]() {
    const double t = take("T");
    if (t < 1 || t != std::floor(t)) config_error("T must be a positive integer");
    return static_cast<std::int64_t>(t);
  };
  json out;
  try {
    if (theorem == "Theorem1") {
      const double lm = take("L_M");
      const StepTuning s = tune_theorem1(lm, horizon());
      out = {{"eta_x", s.eta_x}, {"eta_y", s.eta_y}, {"rho_x", s.rho_x}, {"rho_y", s.rho_y}};
    } else if (theorem == "Corollary1") {
      const double l = take("L");
      const double gx = kv.count("gamma_x") ? take("gamma_x") : 1.0;
      const double gy = kv.count("gamma_y") ? take("gamma_y") : 1.0;
      const StepTuning s = tune_corollary1(l, gx, gy, horizon());
      out = {{"eta_x", s.eta_x}, {"eta_y", s.eta_y}, {"rho_x", s.rho_x}, {"rho_y", s.rho_y}};
    } else if (theorem == "Theorem3") {
      const double s = take("S");
      const double a = take("A");
      if (s < 1 || a < 1 || s != std::floor(s) || a != std::floor(a)) {
        config_error("S and A must be positive integers");
      }
      const MdpTuning t = tune_theorem3(static_cast<int>(s), static_cast<int>(a), horizon());
      out = {{"eta_mu", t.eta_mu}, {"eta_v", t.eta_v}, {"rho_v", t.rho_v}};
    } else {
      config_error("theorem must be Theorem1, Corollary1 or Theorem3");
    }
  } catch (const ParameterError& e) {
    config_error(e.what());
  }
  if (!kv.empty()) config_error("unknown parameter " + kv.begin()->first);
  return out.dump(2);
}

}  // namespace sadpt
