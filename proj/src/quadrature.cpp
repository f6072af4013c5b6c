#include "toric_flow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toric_flow/errors.hpp"

namespace toric_flow {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16) break;
    }
    // Recompute P_n' at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureResult integrate_doubling(
    const std::function<void(double, std::vector<double>&)>& f, int components,
    double a, double b, int n0, double rel_tol, int max_nodes, double abs_floor) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::vector<double> buf(components);

  auto estimate = [&](int n) {
    const QuadratureRule rule = gauss_legendre(n);
    std::vector<double> acc(components, 0.0);
    for (int i = 0; i < n; ++i) {
      f(mid + half * rule.nodes[i], buf);
      for (int c = 0; c < components; ++c) acc[c] += rule.weights[i] * buf[c];
    }
    for (double& v : acc) v *= half;
    return acc;
  };

  QuadratureResult out;
  int n = std::max(1, n0);
  std::vector<double> prev = estimate(n);
  while (true) {
    const int next_n = 2 * n;
    std::vector<double> next = estimate(next_n);
    double change = 0.0;
    for (int c = 0; c < components; ++c) {
      const double scale = std::max(std::abs(next[c]), abs_floor);
      change = std::max(change, std::abs(next[c] - prev[c]) / scale);
    }
    out.values = next;
    out.nodes = next_n;
    out.rel_change = change;
    if (change <= rel_tol) {
      out.converged = true;
      return out;
    }
    if (2 * next_n > max_nodes) return out;
    prev = std::move(next);
    n = next_n;
  }
}

}  // namespace toric_flow
