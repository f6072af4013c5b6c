#include "toric_flow/linalg.hpp"

#include <array>
#include <cmath>

#include "toric_flow/errors.hpp"

namespace toric_flow {
namespace {

// Higham (2005) backward-error bounds for the [m/m] Pade approximants.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

constexpr std::array<double, 4> kPade3 = {120., 60., 12., 1.};
constexpr std::array<double, 6> kPade5 = {30240., 15120., 3360., 420., 30., 1.};
constexpr std::array<double, 8> kPade7 = {17297280., 8648640., 1995840., 277200.,
                                          25200.,    1512.,    56.,      1.};
constexpr std::array<double, 10> kPade9 = {
    17643225600., 8821612800., 2075673600., 302702400., 30270240.,
    2162160.,     110880.,     3960.,       90.,        1.};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000., 32382376266240000., 7771770303897600.,
    1187353796428800.,  129060195264000.,   10559470521600.,
    670442572800.,      33522128640.,       1323241920.,
    40840800.,          960960.,            16380.,
    182.,               1.};

template <std::size_t N>
TorusMatrix pade_low_degree(const TorusMatrix& a, const std::array<double, N>& b) {
  const Eigen::Index n = a.rows();
  const TorusMatrix id = TorusMatrix::Identity(n, n);
  const TorusMatrix a2 = a * a;
  TorusMatrix power = id;
  TorusMatrix u_inner = TorusMatrix::Zero(n, n);
  TorusMatrix v = TorusMatrix::Zero(n, n);
  for (std::size_t j = 0; j < N; j += 2) {
    v += b[j] * power;
    u_inner += b[j + 1] * power;
    power = power * a2;
  }
  const TorusMatrix u = a * u_inner;
  return (v - u).partialPivLu().solve(v + u);
}

TorusMatrix pade13(const TorusMatrix& a) {
  const auto& b = kPade13;
  const Eigen::Index n = a.rows();
  const TorusMatrix id = TorusMatrix::Identity(n, n);
  const TorusMatrix a2 = a * a;
  const TorusMatrix a4 = a2 * a2;
  const TorusMatrix a6 = a4 * a2;
  TorusMatrix tmp = b[13] * a6 + b[11] * a4 + b[9] * a2;
  const TorusMatrix u =
      a * (a6 * tmp + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  tmp = b[12] * a6 + b[10] * a4 + b[8] * a2;
  const TorusMatrix v = a6 * tmp + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

double one_norm(const TorusMatrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

bool all_finite(const TorusMatrix& m) { return m.allFinite(); }

TorusMatrix matrix_exp(const TorusMatrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("matrix_exp: matrix is not square");
  if (!m.allFinite()) throw InvalidArgument("matrix_exp: non-finite entry");
  if (m.rows() == 0) return m;

  if (m == m.transpose()) {
    Eigen::SelfAdjointEigenSolver<TorusMatrix> eig(m);
    const TorusVector e = eig.eigenvalues().array().exp().matrix();
    const TorusMatrix& vecs = eig.eigenvectors();
    return symmetrized(vecs * e.asDiagonal() * vecs.transpose());
  }

  const double norm = one_norm(m);
  if (norm <= kTheta3) return pade_low_degree(m, kPade3);
  if (norm <= kTheta5) return pade_low_degree(m, kPade5);
  if (norm <= kTheta7) return pade_low_degree(m, kPade7);
  if (norm <= kTheta9) return pade_low_degree(m, kPade9);

  int squarings = 0;
  if (norm > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
  }
  TorusMatrix r = pade13(m / std::ldexp(1.0, squarings));
  for (int i = 0; i < squarings; ++i) r = (r * r).eval();
  return r;
}

TorusMatrix matrix_log_spd(const TorusMatrix& m) {
  if (!m.allFinite()) throw InvalidArgument("matrix_log_spd: non-finite entry");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw InvalidArgument("matrix_log_spd: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<TorusMatrix> eig(m);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw InvalidArgument("matrix_log_spd: matrix is not positive definite");
  }
  const TorusVector l = eig.eigenvalues().array().log().matrix();
  const TorusMatrix& vecs = eig.eigenvectors();
  return symmetrized(vecs * l.asDiagonal() * vecs.transpose());
}

}  // namespace toric_flow
