#include "toric_flow/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "toric_flow/errors.hpp"

namespace toric_flow {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

TorusMatrix integer_power(const TorusMatrix& m, const TorusMatrix& m_inv, int k) {
  const TorusMatrix& base = k >= 0 ? m : m_inv;
  TorusMatrix out = TorusMatrix::Identity(m.rows(), m.cols());
  for (int i = 0; i < std::abs(k); ++i) out = (out * base).eval();
  return out;
}

void require_finite(const TorusMatrix& m, double s, const char* what) {
  if (!m.allFinite()) {
    std::ostringstream msg;
    msg << "metric_at: " << what << " overflowed at s = " << s
        << " (|s| times the spectral radius of A is too large)";
    throw RangeError(msg.str());
  }
}

}  // namespace

CouplingMatrix::CouplingMatrix(TorusMatrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols() || a_.rows() < 1) {
    throw InvalidArgument("CouplingMatrix: A must be square with n >= 1");
  }
  if (a_.rows() > kMaxTorusDim) {
    throw InvalidArgument("CouplingMatrix: n exceeds the supported maximum of " +
                          std::to_string(kMaxTorusDim));
  }
  if (!a_.allFinite()) throw InvalidArgument("CouplingMatrix: non-finite entry");

  symmetric_ = (a_ == a_.transpose());
  if (symmetric_) {
    Eigen::SelfAdjointEigenSolver<TorusMatrix> eig(a_);
    eigvecs_ = eig.eigenvectors();
    eigvals_ = eig.eigenvalues();
  }
  automorphism_ = check_integer_automorphism(*this);
  if (automorphism_.ok) {
    deck_inv_ = automorphism_.rounded.inverse().array().round().matrix();
  }
}

CouplingMatrix CouplingMatrix::zero(int n) {
  return CouplingMatrix(TorusMatrix::Zero(n, n));
}

CouplingMatrix CouplingMatrix::from_row_major(int n, std::span<const double> entries) {
  if (n < 1 || static_cast<std::size_t>(n) * n != entries.size()) {
    throw InvalidArgument("CouplingMatrix: expected " + std::to_string(n * n) +
                          " entries, got " + std::to_string(entries.size()));
  }
  TorusMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = entries[i * n + j];
  return CouplingMatrix(std::move(a));
}

CouplingMatrix CouplingMatrix::log_of(const TorusMatrix& automorphism) {
  return CouplingMatrix(matrix_log_spd(automorphism));
}

TorusMatrix CouplingMatrix::exp_at(double s) const {
  if (symmetric_) {
    const TorusVector e = (s * eigvals_).array().exp().matrix();
    return symmetrized(eigvecs_ * e.asDiagonal() * eigvecs_.transpose());
  }
  return matrix_exp(s * a_);
}

TorusMatrix CouplingMatrix::q_inv(double s) const {
  if (symmetric_) {
    const TorusVector e = (-2.0 * s * eigvals_).array().exp().matrix();
    return symmetrized(eigvecs_ * e.asDiagonal() * eigvecs_.transpose());
  }
  const TorusMatrix e = matrix_exp(-s * a_);
  return symmetrized(e * e.transpose());
}

double CouplingMatrix::kinetic(double s, const TorusVector& p) const {
  if (symmetric_) {
    const TorusVector w = eigvecs_.transpose() * p;
    return 0.5 * ((-2.0 * s * eigvals_).array().exp() * w.array().square()).sum();
  }
  return 0.5 * (matrix_exp(-s * a_).transpose() * p).squaredNorm();
}

const TorusMatrix& CouplingMatrix::deck_matrix() const {
  if (!automorphism_.ok) {
    throw PreconditionError("deck transformation requires integer exp(A): " +
                            automorphism_.diagnostic);
  }
  return automorphism_.rounded;
}

const TorusMatrix& CouplingMatrix::deck_matrix_inverse() const {
  deck_matrix();
  return deck_inv_;
}

double CouplingMatrix::max_growth_rate() const {
  if (symmetric_) return eigvals_.maxCoeff();
  Eigen::EigenSolver<TorusMatrix> eig(a_, false);
  return eig.eigenvalues().real().maxCoeff();
}

PhasePoint PhasePoint::zero(int n) {
  PhasePoint z;
  z.x = TorusVector::Zero(n);
  z.p = TorusVector::Zero(n);
  return z;
}

bool PhasePoint::finite() const {
  return x.allFinite() && p.allFinite() && std::isfinite(s) && std::isfinite(p_s);
}

double reduce_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r >= kTwoPi ? 0.0 : r;
}

PhasePoint PhasePoint::normalized() const {
  PhasePoint out = *this;
  for (Eigen::Index i = 0; i < out.x.size(); ++i) out.x[i] = reduce_angle(out.x[i]);
  return out;
}

PhaseVector PhasePoint::pack() const {
  const int n = dim();
  PhaseVector v(2 * n + 2);
  v.head(n) = x;
  v[n] = s;
  v.segment(n + 1, n) = p;
  v[2 * n + 1] = p_s;
  return v;
}

PhasePoint PhasePoint::unpack(const PhaseVector& v, int n) {
  PhasePoint z;
  z.x = v.head(n);
  z.s = v[n];
  z.p = v.segment(n + 1, n);
  z.p_s = v[2 * n + 1];
  return z;
}

MetricEvaluation metric_at(const CouplingMatrix& a, double s) {
  if (!std::isfinite(s)) throw InvalidArgument("metric_at: non-finite s");
  MetricEvaluation m;
  m.s = s;
  const TorusMatrix e = a.exp_at(s);
  require_finite(e, s, "exp(sA)");
  m.q = symmetrized(e.transpose() * e);
  m.q_inv = a.q_inv(s);
  require_finite(m.q, s, "Q(s)");
  require_finite(m.q_inv, s, "Q(s)^-1");
  const TorusMatrix& am = a.matrix();
  m.dq_inv_ds = symmetrized(-(am * m.q_inv + m.q_inv * am.transpose()));
  return m;
}

double hamiltonian(const CouplingMatrix& a, const FourierPotential& v,
                   const PhasePoint& z) {
  if (!z.finite()) throw InvalidArgument("hamiltonian: non-finite phase point");
  const double kinetic = a.kinetic(z.s, z.p);
  if (!std::isfinite(kinetic)) {
    throw RangeError("hamiltonian: kinetic energy overflows at s = " + std::to_string(z.s));
  }
  return kinetic + 0.5 * z.p_s * z.p_s + v.value(z.s);
}

double riemannian_norm(const MetricEvaluation& metric, const PhaseVector& tangent) {
  const PhaseLayout l{static_cast<int>(metric.q.rows())};
  if (tangent.size() != l.size()) {
    throw InvalidArgument("riemannian_norm: tangent has wrong dimension");
  }
  const auto dx = tangent.head(l.n);
  const auto dp = tangent.segment(l.n + 1, l.n);
  const double sq = dx.dot(metric.q * dx) + tangent[l.s()] * tangent[l.s()] +
                    dp.dot(metric.q_inv * dp) + tangent[l.p_s()] * tangent[l.p_s()];
  return std::sqrt(std::max(sq, 0.0));
}

AutomorphismCheck check_integer_automorphism(const CouplingMatrix& a) {
  AutomorphismCheck out;
  const TorusMatrix e = matrix_exp(a.matrix());
  out.rounded = e.array().round().matrix();
  out.max_residual = (e - out.rounded).cwiseAbs().maxCoeff();
  out.determinant = e.determinant();
  const bool integer = out.max_residual <= kAutomorphismTol;
  const bool unimodular = std::abs(std::abs(out.determinant) - 1.0) <= kAutomorphismTol;
  out.ok = integer && unimodular;

  std::ostringstream msg;
  msg << "exp(A) rounded = [";
  for (Eigen::Index i = 0; i < out.rounded.rows(); ++i) {
    if (i) msg << "; ";
    for (Eigen::Index j = 0; j < out.rounded.cols(); ++j) {
      if (j) msg << ", ";
      msg << out.rounded(i, j);
    }
  }
  msg << "], max residual " << out.max_residual << ", det " << out.determinant;
  if (!integer) msg << " (not integer within " << kAutomorphismTol << ")";
  if (!unimodular) msg << " (|det| != 1)";
  out.diagnostic = msg.str();
  return out;
}

PhasePoint deck_transform(const CouplingMatrix& a, const PhasePoint& z, int k) {
  if (k == 0) return z;
  const TorusMatrix& m = a.deck_matrix();
  const TorusMatrix& m_inv = a.deck_matrix_inverse();
  const TorusMatrix mk = integer_power(m, m_inv, k);
  const TorusMatrix mk_inv_t = integer_power(m_inv, m, k).transpose();

  PhasePoint out;
  out.x = mk * z.normalized().x;
  for (Eigen::Index i = 0; i < out.x.size(); ++i) out.x[i] = reduce_angle(out.x[i]);
  out.s = z.s - k;
  out.p = mk_inv_t * z.p;
  out.p_s = z.p_s;
  return out;
}

PhaseVector deck_push_tangent(const CouplingMatrix& a, const PhaseVector& tangent,
                              int k) {
  if (k == 0) return tangent;
  const PhaseLayout l{a.dim()};
  const TorusMatrix& m = a.deck_matrix();
  const TorusMatrix& m_inv = a.deck_matrix_inverse();
  PhaseVector out = tangent;
  out.head(l.n) = integer_power(m, m_inv, k) * tangent.head(l.n);
  out.segment(l.n + 1, l.n) =
      integer_power(m_inv, m, k).transpose() * tangent.segment(l.n + 1, l.n);
  return out;
}

WrappedPoint wrap_to_fundamental(const CouplingMatrix& a, const PhasePoint& z) {
  a.deck_matrix();
  int k = static_cast<int>(std::floor(z.s));
  WrappedPoint w{deck_transform(a, z, k), k};
  // s - floor(s) can round up to exactly 1.
  if (w.point.s >= 1.0) {
    w.point = deck_transform(a, w.point, 1);
    w.k += 1;
  }
  return w;
}

}  // namespace toric_flow
