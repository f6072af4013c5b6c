#pragma once

#include <functional>
#include <vector>

namespace toric_flow {

struct QuadratureRule {
  std::vector<double> nodes;    ///< on [-1, 1], ascending
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (Newton iteration on P_n from Chebyshev
/// initial guesses).
QuadratureRule gauss_legendre(int n);

struct QuadratureResult {
  std::vector<double> values;  ///< one per integrand component
  int nodes = 0;               ///< node count of the accepted estimate
  double rel_change = 0.0;     ///< max relative change at the last doubling
  bool converged = false;
};

/// Integrates a vector-valued f over [a, b], doubling the node count from
/// n0 until successive estimates agree to rel_tol (componentwise, relative to
/// max(|value|, abs_floor)), or max_nodes is reached.
QuadratureResult integrate_doubling(
    const std::function<void(double, std::vector<double>&)>& f, int components,
    double a, double b, int n0, double rel_tol, int max_nodes = 12800,
    double abs_floor = 1e-300);

}  // namespace toric_flow
