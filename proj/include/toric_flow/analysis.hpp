#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "toric_flow/dynamics.hpp"
#include "toric_flow/reduction.hpp"

namespace toric_flow {

enum class Direction { Up, Down, Both };

const char* to_string(Direction d);

/// The hypersurface s = s0 (s = s0 mod 1 on the suspension).
struct SectionSpec {
  double s0 = 0.5;
  Direction direction = Direction::Up;
};

struct SectionCrossing {
  double t = 0.0;
  PhasePoint z;
  Direction direction = Direction::Up;  ///< Up or Down, never Both
  bool grazing = false;                 ///< |p_s| < 1e-12 at the crossing
};

inline constexpr double kSectionTol = 1e-10;
inline constexpr double kGrazingTol = 1e-12;

/// Crossings of the section by the orbit of z0, each refined by bisection on
/// a re-integrated sub-step to |s - s0| < 1e-10. Integration runs to
/// cfg.t_end or until max_crossings matching crossings were found.
std::vector<SectionCrossing> find_section_crossings(const Model& model,
                                                    const PhasePoint& z0,
                                                    const IntegratorConfig& cfg,
                                                    const SectionSpec& section,
                                                    int max_crossings);

/// Next crossing in the same direction as `crossing`, within cfg.t_end of
/// it. std::nullopt when the orbit does not come back (no return exists).
std::optional<SectionCrossing> poincare_return(const Model& model,
                                               const SectionCrossing& crossing,
                                               const IntegratorConfig& cfg,
                                               const SectionSpec& section);

enum class NormConvention { Riemannian, Coordinate };

const char* to_string(NormConvention n);

struct LyapunovEstimate {
  double horizon = 0.0;
  double renorm_interval = 0.0;
  std::vector<double> times;   ///< t_k = k * renorm_interval
  std::vector<double> series;  ///< running mean growth rate lambda(t_k)
  double final_value = 0.0;
  NormConvention norm = NormConvention::Riemannian;

  /// lambda at the last renormalization time <= t.
  double at(double t) const;
};

struct MleOptions {
  NormConvention norm = NormConvention::Riemannian;
  /// Initial tangent; defaults to the normalized all-ones vector.
  std::optional<PhaseVector> initial_tangent;
};

/// Benettin's method with a single tangent vector.
LyapunovEstimate mle_benettin(const Model& model, const PhasePoint& z0, double horizon,
                              double renorm_interval, const IntegratorConfig& cfg,
                              const MleOptions& opts = {});

enum class Classification { Zero, Positive, Indeterminate, Empty };

const char* to_string(Classification c);

/// theta(T) = 20 / T. Zero below theta; Positive when both the final and
/// the half-horizon estimates exceed 2 theta; Indeterminate in between.
Classification classify_mle(double lambda_final, double lambda_half, double horizon);

struct ScanSpec {
  std::vector<double> h_grid;
  int samples_per_level = 1;
  double horizon = 1000.0;
  double renorm_interval = 1.0;
  IntegratorConfig cfg;
  std::uint64_t seed = 0;
};

struct ScanRow {
  double h = 0.0;
  int sample = 0;
  double lambda_final = 0.0;
  double lambda_half = 0.0;
  Classification classification = Classification::Empty;
  double horizon = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

/// Reproducible initial condition on E_h for (seed, level, sample). Below
/// V_max: s uniform over {V < h}, p drawn in a ball scaled so the point stays
/// in its V_eff well, p_s = +-sqrt(2 (h - V_eff(s))). At or above V_max:
/// p = 0 and s uniform on [0, 1). Empty when h < V_min.
std::optional<PhasePoint> draw_on_level(const Model& model, double h, std::uint64_t seed,
                                        int level, int sample);

/// One MLE run per (level, sample), fanned out over OpenMP threads.
/// threads <= 0 uses the OpenMP default. Rows are ordered by (level, sample)
/// regardless of completion order.
std::vector<ScanRow> entropy_scan(const Model& model, const ScanSpec& spec, int threads = 0);

/// Serial reference for entropy_scan.
std::vector<ScanRow> entropy_scan_serial(const Model& model, const ScanSpec& spec);

/// h,sample,lambda_final,lambda_half,classification,T,dt,seed with 17
/// significant digits.
std::string scan_csv(const std::vector<ScanRow>& rows);

/// max |eig(A)| / T_1 for symmetric A, c = 0, h > V_max; sqrt(2h) max |eig(A)|
/// when V is constant zero. PreconditionError outside that regime.
double analytic_mle_oracle(const Model& model, double h, const MomentumConstants& c);

}  // namespace toric_flow
