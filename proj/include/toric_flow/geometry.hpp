#pragma once

#include <optional>
#include <span>
#include <string>

#include "toric_flow/linalg.hpp"
#include "toric_flow/potential.hpp"

namespace toric_flow {

/// Result of testing whether exp(A) is an integer matrix with |det| = 1.
struct AutomorphismCheck {
  bool ok = false;
  TorusMatrix rounded;        ///< exp(A) rounded entrywise
  double max_residual = 0.0;  ///< max |exp(A)_ij - rounded_ij|
  double determinant = 0.0;   ///< det(exp(A))
  std::string diagnostic;
};

inline constexpr double kAutomorphismTol = 1e-9;

/// The n x n matrix A generating the fiber-dependent torus metric
/// Q(s) = exp(sA)^T exp(sA).
///
/// Construction caches what the hot loops need: an eigendecomposition when A
/// is exactly symmetric, and exp(A) together with its integer-automorphism
/// verdict for the deck transformation.
class CouplingMatrix {
 public:
  explicit CouplingMatrix(TorusMatrix a);

  static CouplingMatrix zero(int n);
  static CouplingMatrix from_row_major(int n, std::span<const double> entries);
  /// A = log(M) for a symmetric positive-definite M, e.g. the cat map.
  static CouplingMatrix log_of(const TorusMatrix& automorphism);

  int dim() const { return static_cast<int>(a_.rows()); }
  const TorusMatrix& matrix() const { return a_; }
  bool symmetric() const { return symmetric_; }

  /// exp(sA).
  TorusMatrix exp_at(double s) const;
  /// Q(s)^{-1} = exp(-sA) exp(-sA)^T, symmetrized.
  TorusMatrix q_inv(double s) const;
  /// 1/2 p^T Q^{-1}(s) p, evaluated as 1/2 |exp(-sA)^T p|^2.
  double kinetic(double s, const TorusVector& p) const;

  const AutomorphismCheck& automorphism() const { return automorphism_; }
  /// Rounded exp(A) and its inverse; throws PreconditionError unless the
  /// automorphism check passed.
  const TorusMatrix& deck_matrix() const;
  const TorusMatrix& deck_matrix_inverse() const;

  /// Largest real part among the eigenvalues of A.
  double max_growth_rate() const;

 private:
  TorusMatrix a_;
  bool symmetric_ = false;
  TorusMatrix eigvecs_;
  TorusVector eigvals_;
  AutomorphismCheck automorphism_;
  TorusMatrix deck_inv_;
};

/// Q(s), its inverse, and d(Q^{-1})/ds at one fiber coordinate.
struct MetricEvaluation {
  double s = 0.0;
  TorusMatrix q;
  TorusMatrix q_inv;
  TorusMatrix dq_inv_ds;
};

/// A point (x, s, p, p_s) of T*M. x is kept lifted (not reduced) during
/// integration so winding numbers stay observable; normalized() reduces it.
struct PhasePoint {
  TorusVector x;
  double s = 0.0;
  TorusVector p;
  double p_s = 0.0;

  static PhasePoint zero(int n);
  int dim() const { return static_cast<int>(x.size()); }
  bool finite() const;
  /// Copy with angles reduced to [0, 2 pi).
  PhasePoint normalized() const;

  /// Packed layout (x_1..x_n, s, p_1..p_n, p_s), shared with tangents and
  /// Jacobians.
  PhaseVector pack() const;
  static PhasePoint unpack(const PhaseVector& v, int n);
};

/// Phase-space indices in the packed layout.
struct PhaseLayout {
  int n;
  int x(int i) const { return i; }
  int s() const { return n; }
  int p(int i) const { return n + 1 + i; }
  int p_s() const { return 2 * n + 1; }
  int size() const { return 2 * n + 2; }
};

double reduce_angle(double x);

MetricEvaluation metric_at(const CouplingMatrix& a, double s);

/// H = 1/2 p^T Q^{-1}(s) p + 1/2 p_s^2 + V(s).
double hamiltonian(const CouplingMatrix& a, const FourierPotential& v,
                   const PhasePoint& z);

/// sqrt(dx^T Q dx + ds^2 + dp^T Q^{-1} dp + dp_s^2), the block metric
/// g + g^{-1} on T(T*M).
double riemannian_norm(const MetricEvaluation& metric, const PhaseVector& tangent);

AutomorphismCheck check_integer_automorphism(const CouplingMatrix& a);

/// phi^k: x -> exp(A)^k x (mod 2 pi), s -> s - k, p -> exp(A)^{-kT} p.
PhasePoint deck_transform(const CouplingMatrix& a, const PhasePoint& z, int k);

/// Differential of phi^k acting on a packed tangent vector.
PhaseVector deck_push_tangent(const CouplingMatrix& a, const PhaseVector& tangent,
                              int k);

struct WrappedPoint {
  PhasePoint point;
  int k = 0;  ///< deck power applied
};

/// phi^k(z) with k = floor(s), so the result has s in [0, 1).
WrappedPoint wrap_to_fundamental(const CouplingMatrix& a, const PhasePoint& z);

}  // namespace toric_flow
