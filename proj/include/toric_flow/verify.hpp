#pragma once

#include <string>
#include <vector>

#include "toric_flow/scenario.hpp"

namespace toric_flow {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool passed = false;
  std::string detail;  ///< skip reason or failure diagnostic
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  std::string table() const;
};

/// Runs the invariant suite against one scenario: metric identities, the
/// Jacobian, conservation with the scenario's own integrator, reversibility,
/// the p = 0 band formula, the reduced period, the Poincare identity and a
/// short Lyapunov dichotomy run. Numerical failures inside a check fail that
/// check instead of aborting the suite.
VerifyReport verify_suite(const Scenario& scenario);

}  // namespace toric_flow
