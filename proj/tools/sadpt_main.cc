// sadpt: run experiment configurations, acceptance gates, and print step-size
// tunings.
//
//   sadpt run config.json
//   sadpt gate all | <gate-name>
//   sadpt print-tuning Theorem1 L_M=1 T=1000

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sadpt/acceptance.hpp"
#include "sadpt/errors.hpp"
#include "sadpt/harness.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kGateFailure = 3;

int run_command(const std::string& path) {
  const sadpt::ExperimentConfig cfg = sadpt::parse_config(path);
  const sadpt::SweepSummary summary = sadpt::run_scenario(cfg);
  for (const sadpt::HorizonStat& st : summary.per_horizon) {
    std::printf("T=%lld mean=%.6g stderr=%.3g n=%zu\n", static_cast<long long>(st.horizon),
                st.mean, st.std_error, st.count);
  }
  if (summary.fit) {
    std::printf("slope=%.6g intercept=%.6g\n", summary.fit->slope, summary.fit->intercept);
  } else {
    std::printf("slope=absent\n");
  }
  return 0;
}

int gate_command(const std::string& suite) {
  bool all_passed = true;
  for (const sadpt::GateResult& r : sadpt::run_gate_suite(suite)) {
    std::cout << sadpt::format_gate_line(r) << std::endl;
    all_passed = all_passed && r.passed;
  }
  return all_passed ? 0 : kGateFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilized stochastic saddle-point solvers and experiment driver"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment configuration");
  run->add_option("config", config_path, "Configuration JSON")->required();

  std::string suite;
  auto* gate = app.add_subcommand("gate", "Run acceptance gates ('all' or one name)");
  gate->add_option("suite", suite, "Gate name or 'all'")->required();

  std::string theorem;
  std::vector<std::string> params;
  auto* tuning = app.add_subcommand("print-tuning", "Print step sizes for a tuning rule");
  tuning->add_option("theorem", theorem, "Theorem1 | Corollary1 | Theorem3")->required();
  tuning->add_option("params", params, "key=value parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return run_command(config_path);
    if (*gate) return gate_command(suite);
    std::cout << sadpt::print_tuning(theorem, params) << std::endl;
    return 0;
  } catch (const sadpt::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return kConfigError;
  } catch (const sadpt::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
