#include "toric_flow/reduction.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "toric_flow/errors.hpp"
#include "toric_flow/quadrature.hpp"

namespace toric_flow {
namespace {

// Step used to walk V_eff outward from a well. Fine enough to resolve every
// feature of a potential accepted by find_extrema's default grid.
constexpr double kWalkStep = 1.0 / 4096.0;
constexpr double kWalkRange = 1.0;
constexpr double kCriticalTol = 1e-9;

double root_in(const std::function<double(double)>& f, double a, double b, double fa,
               double fb) {
  std::uintmax_t iters = 300;
  const auto r = boost::math::tools::toms748_solve(
      f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(), iters);
  return 0.5 * (r.first + r.second);
}

// Slides from `seed` downhill on V_eff to the nearest local minimum.
std::optional<double> slide_to_minimum(const Model& m, const MomentumConstants& c,
                                       double seed) {
  auto slope = [&](double s) { return effective_potential(m, c, s, 1); };
  const double g0 = slope(seed);
  if (g0 == 0.0) {
    return effective_potential(m, c, seed, 2) >= 0.0 ? std::optional<double>(seed)
                                                     : std::nullopt;
  }
  const double dir = g0 > 0.0 ? -1.0 : 1.0;
  double prev = seed;
  double g_prev = g0;
  for (double dist = kWalkStep; dist <= kWalkRange + 0.5 * kWalkStep; dist += kWalkStep) {
    const double next = seed + dir * dist;
    const double g_next = slope(next);
    if (g_next == 0.0) return next;
    if ((g_next > 0.0) != (g_prev > 0.0)) {
      return dir > 0.0 ? root_in(slope, prev, next, g_prev, g_next)
                       : root_in(slope, next, prev, g_next, g_prev);
    }
    prev = next;
    g_prev = g_next;
  }
  return std::nullopt;
}

double default_seed(const Model& m, const MomentumConstants& c) {
  if (c.isZero(0.0)) {
    const PotentialExtrema ext = find_extrema(m.potential);
    if (ext.constant) {
      throw PreconditionError("turning_points: constant effective potential has no well");
    }
    return ext.argmin.front();
  }
  // V_eff is not periodic when c != 0; scan the window around the
  // fundamental domain for the lowest point, then slide into its well.
  double best_s = 0.0;
  double best_v = effective_potential(m, c, 0.0, 0);
  for (double s = -1.0; s <= 2.0; s += kWalkStep) {
    const double v = effective_potential(m, c, s, 0);
    if (v < best_v) {
      best_v = v;
      best_s = s;
    }
  }
  const auto min = slide_to_minimum(m, c, best_s);
  if (!min) {
    throw PreconditionError("turning_points: effective potential has no well near s = " +
                            std::to_string(best_s));
  }
  return *min;
}

// Walks from the well bottom in direction `dir` until V_eff exceeds h.
std::optional<double> walk_to_wall(const Model& m, const MomentumConstants& c, double h,
                                   double start, double dir) {
  auto f = [&](double s) { return effective_potential(m, c, s, 0) - h; };
  double prev = start;
  double f_prev = f(start);
  for (double dist = kWalkStep; dist <= kWalkRange + 0.5 * kWalkStep; dist += kWalkStep) {
    const double next = start + dir * dist;
    const double f_next = f(next);
    if (f_next > 0.0) {
      double r = dir > 0.0 ? root_in(f, prev, next, f_prev, f_next)
                           : root_in(f, next, prev, f_next, f_prev);
      // Keep the turning point on the allowed side so h - V_eff >= 0 inside.
      for (int i = 0; i < 64 && f(r) > 0.0; ++i) r = std::nextafter(r, start);
      return r;
    }
    prev = next;
    f_prev = f_next;
  }
  return std::nullopt;
}

bool is_zero(const MomentumConstants& c) { return c.isZero(0.0); }

// A local maximum of V_eff on [lo, hi] sitting on the level h: the leaf
// contains a hyperbolic equilibrium and its separatrices.
std::optional<double> separatrix_on(const Model& m, const MomentumConstants& c, double h,
                                    double lo, double hi) {
  auto slope = [&](double s) { return effective_potential(m, c, s, 1); };
  const double tol = 1e-10 * std::max(1.0, std::abs(h));
  double prev = lo;
  double g_prev = slope(lo);
  const int steps = std::max(2, static_cast<int>(std::ceil((hi - lo) / kWalkStep)));
  for (int i = 1; i <= steps; ++i) {
    const double next = lo + (hi - lo) * i / steps;
    const double g_next = slope(next);
    if (g_prev > 0.0 && g_next <= 0.0) {
      const double s = g_next == 0.0 ? next : root_in(slope, prev, next, g_prev, g_next);
      if (std::abs(effective_potential(m, c, s, 0) - h) <= tol) return s;
    }
    prev = next;
    g_prev = g_next;
  }
  return std::nullopt;
}

}  // namespace

double effective_potential(const Model& model, const MomentumConstants& c, double s,
                           int order) {
  if (c.size() != model.dim()) throw InvalidArgument("effective_potential: dimension mismatch");
  if (order == 0) return model.coupling.kinetic(s, c) + model.potential.value(s);
  const TorusMatrix qi = model.coupling.q_inv(s);
  const TorusMatrix& a = model.coupling.matrix();
  switch (order) {
    case 1:
      return -c.dot(a * (qi * c)) + model.potential.slope(s);
    case 2: {
      const TorusMatrix dqi = -(a * qi + qi * a.transpose());
      return -c.dot(a * (dqi * c)) + model.potential.curvature(s);
    }
    default:
      throw InvalidArgument("effective_potential: order must be 0, 1 or 2");
  }
}

PointClassification classify_point(const Model& model, const PhasePoint& z, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("classify_point: tol must be > 0");
  const int n = model.dim();
  const PhaseLayout l{n};
  const TorusMatrix qi = model.coupling.q_inv(z.s);
  const double dh_ds = effective_potential(model, z.p, z.s, 1);

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, l.size());
  for (int i = 0; i < n; ++i) d(i, l.p(i)) = 1.0;
  d(n, l.s()) = dh_ds;
  d.block(n, l.p(0), 1, n) = (qi * z.p).transpose();
  d(n, l.p_s()) = z.p_s;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(d);
  const auto& sv = svd.singularValues();
  PointClassification out;
  out.sigma_max = sv.maxCoeff();
  out.sigma_min = sv.minCoeff();
  out.singular = out.sigma_min < tol * out.sigma_max;

  // sigma_min * sigma_max = |(dH/ds, p_s)| for this block structure and
  // sigma_max^2 <= n + |dH|^2, which gives the scale of the closed form.
  const double residual = std::hypot(dh_ds, z.p_s);
  const double scale = 1.0 + d.row(n).squaredNorm();
  out.closed_form_singular = residual < tol * scale;
  out.potential_condition =
      std::hypot(model.potential.slope(z.s), z.p_s) < tol * scale;
  return out;
}

TurningPoints turning_points(const Model& model, const MomentumConstants& c, double h,
                             std::optional<double> seed) {
  if (c.size() != model.dim()) throw InvalidArgument("turning_points: dimension mismatch");
  if (!std::isfinite(h)) throw InvalidArgument("turning_points: non-finite h");

  double well = 0.0;
  if (seed) {
    // Sliding downhill never leaves the component of {V_eff <= h} the seed is in.
    const auto min = slide_to_minimum(model, c, *seed);
    if (min) {
      well = *min;
    } else if (effective_potential(model, c, *seed, 0) <= h) {
      well = *seed;
    } else {
      std::ostringstream msg;
      msg << "turning_points: seed s = " << *seed
          << " is not in a well (no local minimum of V_eff within one period)";
      throw PreconditionError(msg.str());
    }
  } else {
    well = default_seed(model, c);
  }

  TurningPoints tp;
  tp.seed = well;
  if (effective_potential(model, c, well, 0) > h) {
    tp.kind = TurningKind::Empty;
    return tp;
  }
  const auto left = walk_to_wall(model, c, h, well, -1.0);
  const auto right = walk_to_wall(model, c, h, well, +1.0);
  if (!left || !right) {
    tp.kind = TurningKind::Unbounded;
    return tp;
  }
  tp.kind = TurningKind::Band;
  tp.s1 = *left;
  tp.s2 = *right;
  return tp;
}

const char* to_string(LeafKind k) {
  switch (k) {
    case LeafKind::Band: return "band";
    case LeafKind::Unbounded: return "unbounded";
    case LeafKind::Equilibrium: return "equilibrium";
    case LeafKind::SingularFlat: return "singular_flat";
    case LeafKind::Degenerate: return "degenerate";
    case LeafKind::Empty: return "empty";
  }
  return "unknown";
}

LeafDescriptor reduced_period_and_frequencies(const Model& model,
                                              const MomentumConstants& c, double h,
                                              const TurningPoints& band, int nodes) {
  if (band.kind != TurningKind::Band || !(band.s1 < band.s2)) {
    throw PreconditionError("reduced_period_and_frequencies: needs a band with s1 < s2");
  }
  const double s1 = band.s1;
  const double s2 = band.s2;
  const double slope1 = effective_potential(model, c, s1, 1);
  const double slope2 = effective_potential(model, c, s2, 1);
  if (std::abs(slope1) < kCriticalTol || std::abs(slope2) < kCriticalTol) {
    std::ostringstream msg;
    msg << "reduced_period_and_frequencies: non-simple turning point (V_eff' = " << slope1
        << " at s1 = " << s1 << ", " << slope2 << " at s2 = " << s2 << "); separatrix";
    throw DegenerateOrbit(msg.str());
  }

  const int n = model.dim();
  const double mid = 0.5 * (s1 + s2);
  const double half = 0.5 * (s2 - s1);
  // s = mid + half * sin(theta) removes the inverse-square-root endpoint
  // singularities; the integrand in theta is smooth.
  const QuadratureRule edge = gauss_legendre(5);
  // h - V_eff(s) near a turning point, as the integral of V_eff' from it; the
  // direct difference cancels catastrophically there.
  auto edge_gap = [&](double from, double to) {
    double sum = 0.0;
    for (std::size_t k = 0; k < edge.nodes.size(); ++k) {
      const double u = 0.5 * (from + to) + 0.5 * (to - from) * edge.nodes[k];
      sum += edge.weights[k] * effective_potential(model, c, u, 1);
    }
    return -0.5 * (to - from) * sum;
  };
  auto integrand = [&](double theta, std::vector<double>& out) {
    const double s = mid + half * std::sin(theta);
    // 1 -+ sin(theta) = 2 sin^2(pi/4 -+ theta/2), without cancellation.
    const double d1 = 2.0 * half * std::pow(std::sin(0.25 * std::numbers::pi + 0.5 * theta), 2);
    const double d2 = 2.0 * half * std::pow(std::sin(0.25 * std::numbers::pi - 0.5 * theta), 2);
    double gap;
    if (d1 < 0.1 * (s2 - s1)) {
      gap = edge_gap(s1, s1 + d1);
    } else if (d2 < 0.1 * (s2 - s1)) {
      gap = edge_gap(s2, s2 - d2);
    } else {
      gap = h - effective_potential(model, c, s, 0);
    }
    gap = std::max(gap, std::numeric_limits<double>::min());
    const double w = half * std::cos(theta) / std::sqrt(2.0 * gap);
    out[0] = w;
    const TorusVector v = model.coupling.q_inv(s) * c;
    for (int i = 0; i < n; ++i) out[i + 1] = v[i] * w;
  };
  const QuadratureResult q = integrate_doubling(
      integrand, n + 1, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi, nodes,
      kQuadratureTol, 12800, 1e-12);

  LeafDescriptor leaf;
  leaf.kind = LeafKind::Band;
  leaf.regular = true;
  leaf.s1 = s1;
  leaf.s2 = s2;
  leaf.period = 2.0 * q.values[0];
  TorusVector omega(n);
  for (int i = 0; i < n; ++i) omega[i] = q.values[i + 1] / q.values[0];
  leaf.frequencies = omega;
  leaf.reduced_frequency = 2.0 * std::numbers::pi / *leaf.period;
  leaf.quadrature_nodes = q.nodes;
  leaf.quadrature_rel_change = q.rel_change;
  if (!q.converged) leaf.note = "quadrature did not reach the 1e-8 agreement target";
  return leaf;
}

double fiber_transit_time(const FourierPotential& v, double h) {
  const PotentialExtrema ext = find_extrema(v);
  if (!(h > ext.v_max)) {
    throw PreconditionError("fiber_transit_time: requires h > V_max");
  }
  auto f = [&](double s, std::vector<double>& out) {
    out[0] = 1.0 / std::sqrt(2.0 * (h - v.value(s)));
  };
  return integrate_doubling(f, 1, 0.0, 1.0, 64, 1e-13).values[0];
}

LeafDescriptor leaf_classify(const Model& model, const MomentumConstants& c, double h,
                             std::optional<double> seed_s) {
  const int n = model.dim();
  LeafDescriptor leaf;

  auto singular_leaf = [&](double s_star) {
    leaf.regular = false;
    leaf.critical_s = s_star;
    const double curvature = effective_potential(model, c, s_star, 2);
    if (!(curvature > 0.0)) {
      leaf.kind = LeafKind::Degenerate;
      leaf.note = "critical point of V_eff is not a nondegenerate minimum (separatrix)";
    } else if (is_zero(c)) {
      leaf.kind = LeafKind::Equilibrium;
      leaf.s1 = leaf.s2 = s_star;
    } else {
      leaf.kind = LeafKind::SingularFlat;
      leaf.s1 = leaf.s2 = s_star;
      leaf.flat_velocity = model.coupling.q_inv(s_star) * c;
      leaf.frequencies = *leaf.flat_velocity;
    }
    return leaf;
  };

  if (seed_s) {
    const double slope = effective_potential(model, c, *seed_s, 1);
    const double gap = h - effective_potential(model, c, *seed_s, 0);
    if (std::abs(slope) <= kCriticalTol && std::abs(gap) <= 1e-12 * std::max(1.0, std::abs(h))) {
      return singular_leaf(*seed_s);
    }
  }

  const TurningPoints tp = turning_points(model, c, h, seed_s);
  switch (tp.kind) {
    case TurningKind::Empty:
      leaf.kind = LeafKind::Empty;
      return leaf;
    case TurningKind::Unbounded:
      if (is_zero(c)) {
        if (const auto top = separatrix_on(model, c, h, 0.0, 1.0)) {
          leaf.kind = LeafKind::Degenerate;
          leaf.regular = false;
          leaf.critical_s = *top;
          leaf.note = "level passes through a maximum of V (separatrix)";
          return leaf;
        }
      }
      leaf.kind = LeafKind::Unbounded;
      if (is_zero(c)) {
        const PotentialExtrema ext = find_extrema(model.potential);
        if (h > ext.v_max) {
          leaf.period = fiber_transit_time(model.potential, h);
          leaf.reduced_frequency = 1.0 / *leaf.period;
          leaf.frequencies = TorusVector::Zero(n);
        }
      }
      return leaf;
    case TurningKind::Band:
      break;
  }
  if (tp.degenerate()) return singular_leaf(tp.seed);
  if (const auto top = separatrix_on(model, c, h, tp.s1, tp.s2)) {
    leaf.kind = LeafKind::Degenerate;
    leaf.regular = false;
    leaf.s1 = tp.s1;
    leaf.s2 = tp.s2;
    leaf.critical_s = *top;
    leaf.note = "level passes through a maximum of V_eff (separatrix)";
    return leaf;
  }
  try {
    return reduced_period_and_frequencies(model, c, h, tp);
  } catch (const DegenerateOrbit& e) {
    leaf.kind = LeafKind::Degenerate;
    leaf.regular = true;
    leaf.s1 = tp.s1;
    leaf.s2 = tp.s2;
    leaf.note = e.what();
    return leaf;
  }
}

}  // namespace toric_flow
