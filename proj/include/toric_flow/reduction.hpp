#pragma once

#include <optional>
#include <string>

#include "toric_flow/dynamics.hpp"

namespace toric_flow {

/// Conserved torus momenta (p_1, ..., p_n) = c.
using MomentumConstants = TorusVector;

/// V_eff(s) = 1/2 c^T Q^{-1}(s) c + V(s) and its derivatives (order 0, 1, 2).
double effective_potential(const Model& model, const MomentumConstants& c, double s,
                           int order);

/// Numerical-rank verdict on the differentials of (p_1, ..., p_n, H).
struct PointClassification {
  bool singular = false;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// Closed form: p_s = 0 and V_eff'(s) = 0 (with c = p), within tolerance.
  bool closed_form_singular = false;
  /// The condition as displayed for the p = 0 case: p_s = 0 and V'(s) = 0.
  bool potential_condition = false;
};

inline constexpr double kSingularTol = 1e-9;

/// Singular iff sigma_min < tol * sigma_max for the (n+1) x (2n+2) Jacobian.
PointClassification classify_point(const Model& model, const PhasePoint& z,
                                   double tol = kSingularTol);

enum class TurningKind { Band, Unbounded, Empty };

struct TurningPoints {
  TurningKind kind = TurningKind::Empty;
  double s1 = 0.0;
  double s2 = 0.0;
  double seed = 0.0;  ///< the V_eff minimum nearest the search start
  bool degenerate() const { return kind == TurningKind::Band && s2 - s1 <= 1e-12; }
};

/// Connected component of {V_eff <= h} around a well. Without a seed the
/// search starts from the global minimum of V_eff; a seed outside {V_eff <= h}
/// is first slid downhill to its local minimum. PreconditionError when there
/// is no well within one period of the seed.
TurningPoints turning_points(const Model& model, const MomentumConstants& c, double h,
                             std::optional<double> seed = std::nullopt);

enum class LeafKind { Band, Unbounded, Equilibrium, SingularFlat, Degenerate, Empty };

const char* to_string(LeafKind k);

struct LeafDescriptor {
  LeafKind kind = LeafKind::Empty;
  bool regular = true;
  std::optional<double> s1, s2;
  std::optional<double> period;             ///< reduced oscillation period T
  std::optional<TorusVector> frequencies;   ///< torus rotation frequencies
  std::optional<double> reduced_frequency;  ///< 2 pi / T, or mean ds/dt if unbounded
  std::optional<TorusVector> flat_velocity; ///< dx/dt = Q^{-1}(s*) c on singular leaves
  std::optional<double> critical_s;
  int quadrature_nodes = 0;
  double quadrature_rel_change = 0.0;
  std::string note;
};

inline constexpr int kDefaultQuadratureNodes = 200;
inline constexpr double kQuadratureTol = 1e-8;

/// Period and torus frequencies of a band leaf by sine-substituted
/// Gauss-Legendre quadrature with node doubling. DegenerateOrbit when a
/// turning point is not simple.
LeafDescriptor reduced_period_and_frequencies(const Model& model,
                                              const MomentumConstants& c, double h,
                                              const TurningPoints& band,
                                              int nodes = kDefaultQuadratureNodes);

/// Dispatches to Band / Unbounded / Equilibrium / SingularFlat / Degenerate /
/// Empty. Never throws for separatrix leaves; those are reported as
/// Degenerate.
LeafDescriptor leaf_classify(const Model& model, const MomentumConstants& c, double h,
                             std::optional<double> seed_s = std::nullopt);

/// T_1 = integral over one period of ds / sqrt(2 (h - V(s))), for h > V_max.
double fiber_transit_time(const FourierPotential& v, double h);

}  // namespace toric_flow
