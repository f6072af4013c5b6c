#pragma once

#include <Eigen/Dense>

namespace toric_flow {

/// Largest supported torus dimension n. Matrices are stack-allocated up to
/// this bound so the integration loops never touch the heap.
inline constexpr int kMaxTorusDim = 8;
inline constexpr int kMaxPhaseDim = 2 * kMaxTorusDim + 2;

using TorusMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::ColMajor, kMaxTorusDim, kMaxTorusDim>;
using TorusVector =
    Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxTorusDim, 1>;

using PhaseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::ColMajor, kMaxPhaseDim, kMaxPhaseDim>;
using PhaseVector =
    Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxPhaseDim, 1>;

/// exp(M) by scaling and squaring with a diagonal Pade approximant (degree
/// chosen from the 1-norm, up to 13). Exactly symmetric input takes an
/// eigendecomposition path instead. Throws InvalidArgument on non-finite
/// entries.
TorusMatrix matrix_exp(const TorusMatrix& m);

/// Principal logarithm of a symmetric positive-definite matrix.
TorusMatrix matrix_log_spd(const TorusMatrix& m);

/// (B + B^T) / 2.
inline TorusMatrix symmetrized(const TorusMatrix& b) {
  return (0.5 * (b + b.transpose())).eval();
}

bool all_finite(const TorusMatrix& m);

}  // namespace toric_flow
