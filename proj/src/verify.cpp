#include "toric_flow/verify.hpp"

#include <climits>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "toric_flow/errors.hpp"

namespace toric_flow {
namespace {

constexpr std::uint64_t kVerifySeed = 20240611;

struct Draws {
  std::mt19937_64 rng{kVerifySeed};
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  TorusVector vec(int n, double lo, double hi) {
    TorusVector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  PhasePoint point(int n, double s_lo, double s_hi) {
    PhasePoint z;
    z.x = vec(n, 0.0, 2.0 * std::numbers::pi);
    z.s = uniform(s_lo, s_hi);
    z.p = vec(n, -1.0, 1.0);
    z.p_s = uniform(-1.0, 1.0);
    return z;
  }
};

CheckResult run_check(const std::string& name, double bound,
                      const std::function<double(CheckResult&)>& body) {
  CheckResult r;
  r.name = name;
  r.bound = bound;
  try {
    r.measured = body(r);
    r.passed = r.detail.rfind("skipped", 0) == 0 || (std::isfinite(r.measured) && r.measured < bound);
  } catch (const std::exception& e) {
    r.measured = std::nan("");
    r.passed = false;
    r.detail = e.what();
  }
  return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// A p = 0 band point at the midpoint energy between V_min and V_max.
std::optional<PhasePoint> band_point(const Model& m, double& h) {
  const PotentialExtrema ext = find_extrema(m.potential);
  if (ext.constant) return std::nullopt;
  h = 0.5 * (ext.v_min + ext.v_max);
  PhasePoint z = PhasePoint::zero(m.dim());
  z.s = ext.argmin.front();
  z.p_s = std::sqrt(2.0 * (h - ext.v_min));
  return z;
}

double circular_gap(double a, double b) {
  const double d = std::abs(reduce_angle(a) - reduce_angle(b));
  return std::min(d, 2.0 * std::numbers::pi - d);
}

}  // namespace

bool VerifyReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

std::string VerifyReport::table() const {
  std::ostringstream out;
  out << std::left << std::setw(28) << "check" << std::setw(14) << "measured" << std::setw(12)
      << "bound" << "verdict\n";
  for (const auto& c : checks) {
    out << std::left << std::setw(28) << c.name << std::setw(14) << std::setprecision(4)
        << std::scientific << c.measured << std::setw(12) << std::setprecision(1) << c.bound
        << (c.passed ? "PASS" : "FAIL");
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << '\n';
  }
  return out.str();
}

VerifyReport verify_suite(const Scenario& scenario) {
  const Model model = scenario.model();
  const int n = model.dim();
  const CouplingMatrix& a = model.coupling;
  VerifyReport report;
  Draws draws;

  report.checks.push_back(run_check("det_trace_law", 1e-10, [&](CheckResult&) {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double s = draws.uniform(-2.0, 2.0);
      // det Q = det(exp(sA))^2; the determinant of the assembled Q would add a
      // cond(Q) * eps rounding floor.
      const double det = std::pow(a.exp_at(s).determinant(), 2);
      worst = std::max(worst, rel(det, std::exp(2.0 * s * a.matrix().trace())));
    }
    return worst;
  }));

  report.checks.push_back(run_check("dqinv_finite_difference", 1e-6, [&](CheckResult&) {
    constexpr double eps = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double s = draws.uniform(-2.0, 2.0);
      const TorusMatrix fd = (a.q_inv(s + eps) - a.q_inv(s - eps)) / (2.0 * eps);
      const TorusMatrix exact = metric_at(a, s).dq_inv_ds;
      const double scale = std::max(exact.norm(), a.q_inv(s).norm() * 1e-3);
      worst = std::max(worst, (fd - exact).norm() / scale);
    }
    return worst;
  }));

  const bool deck = a.automorphism().ok;
  report.checks.push_back(run_check("deck_metric_invariance", 1e-10, [&](CheckResult& r) {
    if (!deck) {
      r.detail = "skipped: exp(A) is not an integer automorphism";
      return 0.0;
    }
    double worst = 0.0;
    const TorusMatrix& m = a.deck_matrix();
    for (int i = 0; i < 200; ++i) {
      const double s = draws.uniform(-1.0, 2.0);
      const TorusVector dx = draws.vec(n, -1.0, 1.0);
      const double lhs = dx.dot(metric_at(a, s).q * dx);
      const TorusVector mdx = m * dx;
      const double rhs = mdx.dot(metric_at(a, s - 1.0).q * mdx);
      worst = std::max(worst, rel(rhs, lhs));
    }
    return worst;
  }));

  report.checks.push_back(run_check("deck_energy_invariance", 1e-12, [&](CheckResult& r) {
    if (!deck) {
      r.detail = "skipped: exp(A) is not an integer automorphism";
      return 0.0;
    }
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const PhasePoint z = draws.point(n, -1.0, 2.0);
      const int k = static_cast<int>(draws.uniform(-2.0, 3.0));
      const double h = model.energy(z);
      worst = std::max(worst, std::abs(model.energy(deck_transform(a, z, k)) - h) /
                                  std::max(std::abs(h), 1.0));
    }
    return worst;
  }));

  report.checks.push_back(run_check("jacobian_finite_difference", 1e-6, [&](CheckResult&) {
    double worst = 0.0;
    const PhaseLayout l{n};
    for (int i = 0; i < 100; ++i) {
      const PhasePoint z = draws.point(n, -1.0, 2.0);
      const PhaseMatrix exact = flow_jacobian(model, z);
      PhaseMatrix fd(l.size(), l.size());
      const PhaseVector y = z.pack();
      for (int c = 0; c < l.size(); ++c) {
        const double h = 1e-6 * std::max(1.0, std::abs(y[c]));
        PhaseVector yp = y, ym = y;
        yp[c] += h;
        ym[c] -= h;
        auto pack_field = [&](const PhaseVector& v) {
          const FlowDerivative f = vector_field(model, PhasePoint::unpack(v, n));
          PhaseVector out(l.size());
          out << f.dx, f.ds, f.dp, f.dp_s;
          return out;
        };
        fd.col(c) = (pack_field(yp) - pack_field(ym)) / (2.0 * h);
      }
      worst = std::max(worst, (fd - exact).norm() / std::max(exact.norm(), 1.0));
    }
    return worst;
  }));

  // Conservation uses the scenario's own integrator, so a too-coarse dt
  // shows up here.
  report.checks.push_back(run_check("energy_conservation", 1e-8, [&](CheckResult& r) {
    const PhasePoint z0 = scenario.initial_point();
    IntegrateOptions opts;
    opts.sample_stride = LONG_MAX;
    const Trajectory t = integrate(model, z0, scenario.integrator, opts);
    IntegratorConfig half = scenario.integrator;
    half.t_end = 0.5 * half.t_end;
    const Trajectory th = integrate(model, z0, half, opts);
    const double full = t.relative_energy_drift();
    const double first = th.relative_energy_drift();
    std::ostringstream d;
    d << "drift(T/2) = " << first << ", p drift = " << t.max_momentum_drift;
    r.detail = d.str();
    if (t.max_momentum_drift != 0.0) return std::numeric_limits<double>::infinity();
    // Secular drift doubles between T/2 and T; bounded oscillation does not.
    if (full > 1e-13 && full > 1.5 * first) return std::numeric_limits<double>::infinity();
    return full;
  }));

  double h_band = 0.0;
  const auto z_band = band_point(model, h_band);

  report.checks.push_back(run_check("time_reversal", 1e-7, [&](CheckResult& r) {
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 10.0;
    PhasePoint z0 = z_band ? *z_band : scenario.initial_point();
    if (z_band) z0.p = draws.vec(n, -0.05, 0.05);
    if (z_band && effective_potential(model, z0.p, z0.s, 0) >= h_band) z0.p.setZero();
    if (z_band) z0.p_s = std::sqrt(2.0 * (h_band - effective_potential(model, z0.p, z0.s, 0)));
    IntegrateOptions opts;
    opts.sample_stride = LONG_MAX;
    PhasePoint mid = integrate(model, z0, cfg, opts).samples.back();
    mid.p = -mid.p;
    mid.p_s = -mid.p_s;
    PhasePoint back = integrate(model, mid, cfg, opts).samples.back();
    back.p = -back.p;
    back.p_s = -back.p_s;
    if (model.topology == Topology::Suspension) {
      back = wrap_to_fundamental(a, back).point;
      z0 = wrap_to_fundamental(a, z0).point;
      r.detail = "compared on the quotient";
    }
    double worst = std::max({std::abs(back.s - z0.s), std::abs(back.p_s - z0.p_s),
                             (back.p - z0.p).cwiseAbs().maxCoeff()});
    for (int i = 0; i < n; ++i) worst = std::max(worst, circular_gap(back.x[i], z0.x[i]));
    return worst;
  }));

  report.checks.push_back(run_check("band_momentum_formula", 1e-8, [&](CheckResult& r) {
    if (!z_band) {
      r.detail = "skipped: constant potential has no band";
      return 0.0;
    }
    IntegratorConfig cfg;
    cfg.method = Method::ImplicitMidpoint4;
    cfg.dt = 1e-4;
    cfg.t_end = 5.0;
    IntegrateOptions opts;
    opts.sample_stride = 10;
    const Trajectory t = integrate(model, *z_band, cfg, opts);
    double worst = 0.0;
    for (const PhasePoint& z : t.samples) {
      if ((z.x - z_band->x).cwiseAbs().maxCoeff() != 0.0 || !z.p.isZero(0.0)) {
        return std::numeric_limits<double>::infinity();
      }
      if (std::abs(z.p_s) < 1e-3) continue;
      const double expected = std::sqrt(std::max(0.0, 2.0 * (h_band - model.potential.value(z.s))));
      worst = std::max(worst, std::abs(std::abs(z.p_s) - expected));
    }
    return worst;
  }));

  report.checks.push_back(run_check("reduced_period", 1e-4, [&](CheckResult& r) {
    if (!z_band) {
      r.detail = "skipped: constant potential has no band";
      return 0.0;
    }
    const TorusVector c = TorusVector::Zero(n);
    const LeafDescriptor leaf = leaf_classify(model, c, h_band, z_band->s);
    if (!leaf.period) throw std::runtime_error("leaf has no period");
    IntegratorConfig cfg;
    cfg.dt = 1e-4;
    cfg.t_end = 6.0 * *leaf.period;
    const SectionSpec sec{z_band->s + 0.25 * (*leaf.s2 - z_band->s), Direction::Up};
    const auto xs = find_section_crossings(model, *z_band, cfg, sec, 4);
    if (xs.size() < 4) throw std::runtime_error("too few section crossings");
    const double measured = (xs.back().t - xs.front().t) / 3.0;
    return rel(measured, *leaf.period);
  }));

  report.checks.push_back(run_check("poincare_identity", 1e-6, [&](CheckResult& r) {
    if (!z_band) {
      r.detail = "skipped: constant potential has no band";
      return 0.0;
    }
    const PotentialExtrema ext = find_extrema(model.potential);
    IntegratorConfig cfg;
    cfg.dt = 1e-4;
    cfg.t_end = 50.0;
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const double h = ext.v_min + draws.uniform(0.1, 0.9) * (ext.v_max - ext.v_min);
      PhasePoint z = PhasePoint::zero(n);
      z.x = draws.vec(n, 0.0, 2.0 * std::numbers::pi);
      z.s = ext.argmin.front() + draws.uniform(-1e-3, 1e-3);
      z.p_s = std::sqrt(2.0 * (h - model.potential.value(z.s)));
      const SectionSpec sec{ext.argmin.front(), Direction::Up};
      const auto first = find_section_crossings(model, z, cfg, sec, 1);
      if (first.empty()) throw std::runtime_error("no first crossing");
      const auto back = poincare_return(model, first.front(), cfg, sec);
      if (!back) throw std::runtime_error("no return");
      const PhasePoint& p0 = first.front().z;
      const PhasePoint& p1 = back->z;
      worst = std::max({worst, std::abs(p1.s - p0.s), std::abs(p1.p_s - p0.p_s),
                        (p1.x - p0.x).cwiseAbs().maxCoeff(), (p1.p - p0.p).cwiseAbs().maxCoeff()});
    }
    return worst;
  }));

  report.checks.push_back(run_check("lyapunov_dichotomy", 1.0, [&](CheckResult& r) {
    IntegratorConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    constexpr double horizon = 500.0;
    const double theta = 20.0 / horizon;
    const PotentialExtrema ext = find_extrema(model.potential);
    std::ostringstream d;
    double failures = 0.0;
    if (!ext.constant) {
      const double h = 0.5 * (ext.v_min + ext.v_max);
      const auto z = draw_on_level(model, h, kVerifySeed, 0, 0);
      const double lam = mle_benettin(model, *z, horizon, 1.0, cfg).final_value;
      d << "band lambda = " << lam;
      if (!(lam < theta)) failures += 1.0;
    }
    const bool hyperbolic = a.symmetric() && Eigen::SelfAdjointEigenSolver<TorusMatrix>(
                                                 a.matrix()).eigenvalues().cwiseAbs().minCoeff() > 1e-6;
    if (hyperbolic && model.topology == Topology::Suspension) {
      const double h = ext.v_max + 1.0;
      const auto z = draw_on_level(model, h, kVerifySeed, 1, 0);
      const double lam = mle_benettin(model, *z, horizon, 1.0, cfg).final_value;
      const double oracle = analytic_mle_oracle(model, h, TorusVector::Zero(n));
      d << (d.tellp() > 0 ? ", " : "") << "above-V_max lambda = " << lam << " (oracle " << oracle << ")";
      if (!(std::abs(lam - oracle) < 0.25 * oracle)) failures += 1.0;
    }
    r.detail = d.str();
    return failures;
  }));

  return report;
}

}  // namespace toric_flow
