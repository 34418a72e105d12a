#pragma once

// End-to-end acceptance gates. Each gate runs a fixed, seeded experiment and
// reports pass/fail with a one-line detail string.

#include <string>
#include <vector>

namespace sadpt {

struct GateResult {
  int criterion = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Gate names in criterion order (criterion k is element k-1).
const std::vector<std::string>& gate_names();

/// Runs one gate by criterion number (1-based).
GateResult run_gate(int criterion);

/// "all" or a single gate name. Throws ConfigurationError for unknown names.
std::vector<GateResult> run_gate_suite(const std::string& suite);

/// "PASS  3 divergence-contrast   (0.01 s) detail".
std::string format_gate_line(const GateResult& result);

}  // namespace sadpt
