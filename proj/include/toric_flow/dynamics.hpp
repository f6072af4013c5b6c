#pragma once

#include <functional>
#include <span>
#include <vector>

#include "toric_flow/geometry.hpp"
#include "toric_flow/potential.hpp"

namespace toric_flow {

/// Cover: the lifted manifold T^n x R. Suspension: the quotient by the deck
/// group, which needs exp(A) to be an integer automorphism.
enum class Topology { Cover, Suspension };

/// A, V and the topology they live on.
struct Model {
  Model(CouplingMatrix a, FourierPotential v, Topology topology = Topology::Cover);

  CouplingMatrix coupling;
  FourierPotential potential;
  Topology topology;

  int dim() const { return coupling.dim(); }
  double energy(const PhasePoint& z) const {
    return hamiltonian(coupling, potential, z);
  }
};

/// Right-hand side of Hamilton's equations. dp is identically zero.
struct FlowDerivative {
  TorusVector dx;
  double ds = 0.0;
  TorusVector dp;
  double dp_s = 0.0;
};

enum class Method {
  ImplicitMidpoint,
  /// Symmetric triple-jump composition of three implicit midpoint substeps;
  /// fourth order and still symplectic.
  ImplicitMidpoint4,
  RK4,
};

struct IntegratorConfig {
  Method method = Method::ImplicitMidpoint;
  double dt = 1e-3;
  double t_end = 1.0;
  double fixed_point_tol = 1e-13;
  int max_fixed_point_iters = 50;

  /// Throws InvalidArgument unless dt > 0, dt <= t_end (t_end may be 0) and
  /// the tolerances are positive.
  void validate() const;
};

FlowDerivative vector_field(const Model& model, const PhasePoint& z);

/// Exact Jacobian of vector_field in the packed (x, s, p, p_s) layout.
PhaseMatrix flow_jacobian(const Model& model, const PhasePoint& z);

/// One step of size cfg.dt. Momenta p are copied, never updated.
PhasePoint step(const Model& model, const PhasePoint& z, const IntegratorConfig& cfg);

/// One step of size dt with the method and tolerances from cfg. When frames
/// is non-empty its columns are tangent vectors advanced by the linearization
/// of the same step.
PhasePoint step(const Model& model, const PhasePoint& z, double dt,
                const IntegratorConfig& cfg, PhaseMatrix* frames = nullptr);

/// Immutable snapshot of one completed step, handed to observers before any
/// deck wrapping is applied to `next`.
struct StepEvent {
  long index;  ///< step number, 1 for the first step
  double t_prev;
  const PhasePoint& prev;
  double t;
  const PhasePoint& next;
};

/// Returning false stops the integration after the current step.
using Observer = std::function<bool(const StepEvent&)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<PhasePoint> samples;
  std::vector<double> energy_drift;    ///< |H(t) - H(0)| at each sample
  std::vector<double> momentum_drift;  ///< max_i |p_i(t) - p_i(0)| at each sample
  double h0 = 0.0;
  double max_energy_drift = 0.0;       ///< over every step, not only samples
  double max_momentum_drift = 0.0;
  bool stopped_by_observer = false;

  /// max |dH| / max(|H(0)|, 1).
  double relative_energy_drift() const;
};

/// In Suspension mode the base point is pulled back into the fundamental
/// domain whenever s leaves [kWrapLow, kWrapHigh); bounded band motion inside
/// that window is never wrapped.
inline constexpr double kWrapLow = -1.0;
inline constexpr double kWrapHigh = 2.0;

struct IntegrateOptions {
  long sample_stride = 1;  ///< store every k-th step (the last step always)
  std::span<const Observer> observers = {};
};

Trajectory integrate(const Model& model, const PhasePoint& z0,
                     const IntegratorConfig& cfg, const IntegrateOptions& opts = {});

struct TangentFlow {
  Trajectory trajectory;
  std::vector<PhaseMatrix> frames;  ///< aligned with trajectory.samples
};

/// Co-integrates the columns of frames0 along the base flow.
TangentFlow flow_with_tangents(const Model& model, const PhasePoint& z0,
                               const PhaseMatrix& frames0, const IntegratorConfig& cfg,
                               long sample_stride = 1);

/// Applies the lazy suspension wrap to z (and frames). Returns the deck
/// power used; 0 when nothing happened.
int maybe_wrap(const Model& model, PhasePoint& z, PhaseMatrix* frames = nullptr);

}  // namespace toric_flow
