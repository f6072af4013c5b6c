#include "toric_flow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "toric_flow/errors.hpp"

namespace toric_flow {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDedupTol = 1e-8;

double wrap_unit(double s) {
  double r = s - std::floor(s);
  return r >= 1.0 ? 0.0 : r;
}

double circular_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

}  // namespace

FourierPotential::FourierPotential(double a0, std::vector<double> cos_coeffs,
                                   std::vector<double> sin_coeffs)
    : a0_(a0), cos_(std::move(cos_coeffs)), sin_(std::move(sin_coeffs)) {
  const std::size_t k = std::max(cos_.size(), sin_.size());
  cos_.resize(k, 0.0);
  sin_.resize(k, 0.0);
  auto finite = [](double c) { return std::isfinite(c); };
  if (!std::isfinite(a0_) || !std::all_of(cos_.begin(), cos_.end(), finite) ||
      !std::all_of(sin_.begin(), sin_.end(), finite)) {
    throw InvalidArgument("FourierPotential: non-finite coefficient");
  }
  // Trailing zero harmonics carry no information; drop them so equality and
  // round trips do not depend on padding.
  while (!cos_.empty() && cos_.back() == 0.0 && sin_.back() == 0.0) {
    cos_.pop_back();
    sin_.pop_back();
  }
}

bool FourierPotential::is_constant() const { return cos_.empty(); }

double FourierPotential::eval(double s, int order) const {
  const double u = wrap_unit(s);
  double acc = order == 0 ? a0_ : 0.0;
  for (std::size_t i = 0; i < cos_.size(); ++i) {
    const double w = kTwoPi * static_cast<double>(i + 1);
    const double c = std::cos(w * u);
    const double sn = std::sin(w * u);
    switch (order) {
      case 0:
        acc += cos_[i] * c + sin_[i] * sn;
        break;
      case 1:
        acc += w * (-cos_[i] * sn + sin_[i] * c);
        break;
      default:
        acc += -w * w * (cos_[i] * c + sin_[i] * sn);
        break;
    }
  }
  return acc;
}

double eval_potential(const FourierPotential& v, double s, int order) {
  if (order < 0 || order > 2) {
    throw InvalidArgument("eval_potential: order must be 0, 1 or 2, got " +
                          std::to_string(order));
  }
  return v.eval(s, order);
}

std::vector<double> critical_points(const FourierPotential& v, int grid) {
  if (grid < 16) throw InvalidArgument("critical_points: grid too coarse");
  if (v.harmonics() > grid / 8) {
    throw InvalidArgument("critical_points: " + std::to_string(v.harmonics()) +
                          " harmonics exceed grid/8 = " + std::to_string(grid / 8));
  }
  std::vector<double> roots;
  if (v.is_constant()) return roots;

  const double h = 1.0 / grid;
  auto slope = [&](double s) { return v.slope(s); };
  double left = slope(0.0);
  for (int i = 0; i < grid; ++i) {
    const double a = i * h;
    const double b = (i + 1) * h;
    const double right = slope(b);
    if (left == 0.0) {
      roots.push_back(a);
    } else if (right != 0.0 && (left < 0.0) != (right < 0.0)) {
      std::uintmax_t iters = 200;
      const auto bracket = boost::math::tools::toms748_solve(
          slope, a, b, left, right, boost::math::tools::eps_tolerance<double>(),
          iters);
      double r = 0.5 * (bracket.first + bracket.second);
      // One Newton step recovers the last bits when V'' is well away from 0.
      const double curv = v.curvature(r);
      if (curv != 0.0) {
        const double polished = r - slope(r) / curv;
        if (polished >= a && polished <= b &&
            std::abs(slope(polished)) <= std::abs(slope(r))) {
          r = polished;
        }
      }
      roots.push_back(r);
    }
    left = right;
  }

  for (double& r : roots) r = wrap_unit(r);
  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  for (double r : roots) {
    if (unique.empty() || circular_distance(unique.back(), r) > kDedupTol) {
      unique.push_back(r);
    }
  }
  if (unique.size() > 1 && circular_distance(unique.front(), unique.back()) <= kDedupTol) {
    unique.pop_back();
  }
  return unique;
}

PotentialExtrema find_extrema(const FourierPotential& v, int grid) {
  PotentialExtrema out;
  const std::vector<double> crit = critical_points(v, grid);
  if (v.is_constant() || crit.empty()) {
    out.v_min = out.v_max = v.value(0.0);
    out.constant = true;
    return out;
  }

  std::vector<double> values;
  values.reserve(crit.size());
  for (double s : crit) values.push_back(v.value(s));
  out.v_min = *std::min_element(values.begin(), values.end());
  out.v_max = *std::max_element(values.begin(), values.end());

  const double tie = 1e-12 * std::max(1.0, std::max(std::abs(out.v_min), std::abs(out.v_max)));
  for (std::size_t i = 0; i < crit.size(); ++i) {
    if (values[i] - out.v_min <= tie) out.argmin.push_back(crit[i]);
    if (out.v_max - values[i] <= tie) out.argmax.push_back(crit[i]);
  }
  return out;
}

}  // namespace toric_flow
