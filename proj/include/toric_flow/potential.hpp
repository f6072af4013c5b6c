#pragma once

#include <vector>

namespace toric_flow {

/// V(s) = a0 + sum_k a_k cos(2 pi k s) + b_k sin(2 pi k s), k = 1..K.
///
/// Period 1 holds by construction. The two coefficient lists may have
/// different lengths; the shorter one is padded with zeros.
class FourierPotential {
 public:
  FourierPotential() = default;
  FourierPotential(double a0, std::vector<double> cos_coeffs,
                   std::vector<double> sin_coeffs);

  static FourierPotential constant(double a0) { return {a0, {}, {}}; }

  double a0() const { return a0_; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }
  int harmonics() const { return static_cast<int>(cos_.size()); }

  /// True when every harmonic coefficient is exactly zero.
  bool is_constant() const;

  double value(double s) const { return eval(s, 0); }
  double slope(double s) const { return eval(s, 1); }
  double curvature(double s) const { return eval(s, 2); }

  /// V, V' or V'' at s (order 0, 1, 2).
  double eval(double s, int order) const;

  bool operator==(const FourierPotential&) const = default;

 private:
  double a0_ = 0.0;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// Free-function form; throws InvalidArgument for order outside {0,1,2}.
double eval_potential(const FourierPotential& v, double s, int order);

struct PotentialExtrema {
  double v_min = 0.0;
  double v_max = 0.0;
  std::vector<double> argmin;  ///< locations in [0, 1)
  std::vector<double> argmax;
  bool constant = false;
};

inline constexpr int kDefaultExtremaGrid = 4096;

/// Global extrema by a dense scan of V' on [0, 1), root polish of every
/// sign change, and deduplication within 1e-8. Rejects K > grid / 8.
PotentialExtrema find_extrema(const FourierPotential& v,
                              int grid = kDefaultExtremaGrid);

/// All critical points of V in [0, 1), sorted, deduplicated.
std::vector<double> critical_points(const FourierPotential& v,
                                    int grid = kDefaultExtremaGrid);

}  // namespace toric_flow
