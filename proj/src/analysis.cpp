#include "toric_flow/analysis.hpp"

#include <omp.h>

#include <array>
#include <climits>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <random>
#include <sstream>

#include "toric_flow/errors.hpp"

namespace toric_flow {
namespace {

constexpr int kMaxBisections = 200;

// Index of the section sheet below s: floor(s - s0). In cover mode only the
// sheet s = s0 exists, so the index saturates to {-1, 0}.
long sheet(const Model& m, const SectionSpec& sec, double s) {
  const double k = std::floor(s - sec.s0);
  if (m.topology == Topology::Cover) return k < 0.0 ? -1 : 0;
  return static_cast<long>(k);
}

double section_level(const Model& m, const SectionSpec& sec) {
  if (m.topology == Topology::Suspension) return sec.s0 - std::floor(sec.s0);
  return sec.s0;
}

bool direction_matches(Direction want, Direction got) {
  return want == Direction::Both || want == got;
}

// Bisection on the sub-step length from `prev` until |s - level| < tol.
SectionCrossing refine(const Model& m, const IntegratorConfig& cfg, const PhasePoint& prev,
                       double t_prev, double dt, double level, Direction dir) {
  double lo = 0.0;
  double hi = dt;
  PhasePoint best = step(m, prev, dt, cfg);
  double best_tau = dt;
  double g_lo = prev.s - level;
  for (int it = 0; it < kMaxBisections; ++it) {
    if (std::abs(best.s - level) < kSectionTol) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const PhasePoint z = step(m, prev, mid, cfg);
    const double g = z.s - level;
    best = z;
    best_tau = mid;
    if ((g < 0.0) == (g_lo < 0.0) && g != 0.0) {
      lo = mid;
      g_lo = g;
    } else {
      hi = mid;
    }
  }
  SectionCrossing c;
  c.t = t_prev + best_tau;
  c.z = best;
  c.direction = dir;
  c.grazing = std::abs(best.p_s) < kGrazingTol;
  return c;
}

// Pulls a crossing on sheet s0 + k back to the sheet s0 of the quotient.
void to_fundamental_sheet(const Model& m, const SectionSpec& sec, SectionCrossing& c) {
  if (m.topology != Topology::Suspension) return;
  const int k = static_cast<int>(std::lround(c.z.s - section_level(m, sec)));
  if (k != 0) c.z = deck_transform(m.coupling, c.z, k);
  c.z = c.z.normalized();
}

std::vector<SectionCrossing> crossings_impl(const Model& model, const PhasePoint& z0,
                                            const IntegratorConfig& cfg,
                                            const SectionSpec& section, int max_crossings,
                                            bool skip_first_step) {
  const double level0 = section_level(model, section);
  SectionSpec sec = section;
  sec.s0 = level0;
  std::vector<SectionCrossing> found;
  if (max_crossings <= 0) return found;

  // Starting on the section would report a spurious crossing at t = 0.
  const double offset = z0.s - level0;
  const bool on_section =
      model.topology == Topology::Suspension
          ? std::abs(offset - std::round(offset)) < kSectionTol
          : std::abs(offset) < kSectionTol;
  const bool skip = skip_first_step || on_section;

  Observer detect = [&](const StepEvent& e) {
    if (skip && e.index == 1) return true;
    const long k_prev = sheet(model, sec, e.prev.s);
    const long k_next = sheet(model, sec, e.next.s);
    if (k_prev == k_next) return true;
    const Direction dir = k_next > k_prev ? Direction::Up : Direction::Down;
    if (!direction_matches(section.direction, dir)) return true;
    const double level =
        level0 + static_cast<double>(dir == Direction::Up ? k_next : k_prev) *
                     (model.topology == Topology::Suspension ? 1.0 : 0.0);
    SectionCrossing c = refine(model, cfg, e.prev, e.t_prev, e.t - e.t_prev, level, dir);
    to_fundamental_sheet(model, sec, c);
    found.push_back(std::move(c));
    return static_cast<int>(found.size()) < max_crossings;
  };

  IntegrateOptions opts;
  opts.sample_stride = LONG_MAX;
  std::array<Observer, 1> observers{detect};
  opts.observers = observers;
  integrate(model, z0, cfg, opts);
  return found;
}

std::uint64_t mix_seed(std::uint64_t seed, int level, int sample) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(sample)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Portable uniform on [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ScanRow run_sample(const Model& model, const ScanSpec& spec, int level, int sample) {
  ScanRow row;
  row.h = spec.h_grid[level];
  row.sample = sample;
  row.horizon = spec.horizon;
  row.dt = spec.cfg.dt;
  row.seed = spec.seed;
  const auto z0 = draw_on_level(model, row.h, spec.seed, level, sample);
  if (!z0) {
    row.lambda_final = row.lambda_half = std::nan("");
    row.classification = Classification::Empty;
    return row;
  }
  const LyapunovEstimate est =
      mle_benettin(model, *z0, spec.horizon, spec.renorm_interval, spec.cfg);
  row.lambda_final = est.final_value;
  row.lambda_half = est.at(0.5 * spec.horizon);
  row.classification = classify_mle(row.lambda_final, row.lambda_half, spec.horizon);
  return row;
}

void validate_scan(const ScanSpec& spec) {
  if (spec.h_grid.empty()) throw InvalidArgument("entropy_scan: empty h grid");
  if (spec.samples_per_level < 1) {
    throw InvalidArgument("entropy_scan: samples_per_level must be >= 1");
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

}  // namespace

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Both: return "both";
  }
  return "unknown";
}

const char* to_string(NormConvention n) {
  return n == NormConvention::Riemannian ? "riemannian" : "coordinate";
}

const char* to_string(Classification c) {
  switch (c) {
    case Classification::Zero: return "zero";
    case Classification::Positive: return "positive";
    case Classification::Indeterminate: return "indeterminate";
    case Classification::Empty: return "empty";
  }
  return "unknown";
}

std::vector<SectionCrossing> find_section_crossings(const Model& model, const PhasePoint& z0,
                                                    const IntegratorConfig& cfg,
                                                    const SectionSpec& section,
                                                    int max_crossings) {
  return crossings_impl(model, z0, cfg, section, max_crossings, false);
}

std::optional<SectionCrossing> poincare_return(const Model& model,
                                               const SectionCrossing& crossing,
                                               const IntegratorConfig& cfg,
                                               const SectionSpec& section) {
  if (crossing.direction == Direction::Both) {
    throw PreconditionError("poincare_return: crossing direction must be up or down");
  }
  SectionSpec sec = section;
  sec.direction = crossing.direction;
  const auto next = crossings_impl(model, crossing.z, cfg, sec, 1, true);
  if (next.empty()) return std::nullopt;
  SectionCrossing out = next.front();
  out.t += crossing.t;
  return out;
}

double LyapunovEstimate::at(double t) const {
  if (series.empty()) return std::nan("");
  const long k = static_cast<long>(std::floor(t / renorm_interval + 1e-9)) - 1;
  if (k < 0) return series.front();
  return series[std::min<std::size_t>(static_cast<std::size_t>(k), series.size() - 1)];
}

LyapunovEstimate mle_benettin(const Model& model, const PhasePoint& z0, double horizon,
                              double renorm_interval, const IntegratorConfig& cfg,
                              const MleOptions& opts) {
  cfg.validate();
  if (!(renorm_interval > 0.0) || !(horizon >= 100.0 * renorm_interval)) {
    throw InvalidArgument("mle_benettin: need T >= 100 * renorm_interval > 0");
  }
  const long per_interval = std::lround(renorm_interval / cfg.dt);
  if (per_interval < 1 ||
      std::abs(per_interval * cfg.dt - renorm_interval) > 1e-9 * renorm_interval) {
    throw InvalidArgument("mle_benettin: renorm_interval must be a multiple of dt");
  }
  const long intervals = static_cast<long>(std::floor(horizon / renorm_interval + 1e-9));
  const PhaseLayout l{model.dim()};

  auto measure = [&](const PhasePoint& z, const PhaseVector& v) {
    if (opts.norm == NormConvention::Coordinate) return v.norm();
    return riemannian_norm(metric_at(model.coupling, z.s), v);
  };

  PhasePoint z = z0;
  PhaseMatrix frame(l.size(), 1);
  frame.col(0) = opts.initial_tangent ? *opts.initial_tangent
                                      : PhaseVector::Ones(l.size()).eval();
  if (frame.rows() != l.size()) throw InvalidArgument("mle_benettin: tangent dimension");
  const double norm0 = measure(z, frame.col(0));
  if (!(norm0 > 0.0)) throw InvalidArgument("mle_benettin: zero initial tangent");
  frame /= norm0;

  LyapunovEstimate est;
  est.horizon = horizon;
  est.renorm_interval = renorm_interval;
  est.norm = opts.norm;
  est.times.reserve(intervals);
  est.series.reserve(intervals);

  double log_sum = 0.0;
  for (long k = 1; k <= intervals; ++k) {
    for (long i = 0; i < per_interval; ++i) {
      const double t = ((k - 1) * per_interval + i) * cfg.dt;
      try {
        z = step(model, z, cfg.dt, cfg, &frame);
      } catch (const StepFailure& e) {
        throw StepFailure(std::string(e.what()) + " at t = " + std::to_string(t), e.residual(), t);
      }
      maybe_wrap(model, z, &frame);
    }
    const double norm = measure(z, frame.col(0));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw RangeError("mle_benettin: tangent norm degenerated at t = " +
                       std::to_string(k * renorm_interval));
    }
    log_sum += std::log(norm);
    frame /= norm;
    const double t = static_cast<double>(k) * renorm_interval;
    est.times.push_back(t);
    est.series.push_back(log_sum / t);
  }
  est.final_value = est.series.back();
  return est;
}

Classification classify_mle(double lambda_final, double lambda_half, double horizon) {
  const double theta = 20.0 / horizon;
  if (lambda_final < theta) return Classification::Zero;
  if (lambda_final > 2.0 * theta && lambda_half > 2.0 * theta) return Classification::Positive;
  return Classification::Indeterminate;
}

std::optional<PhasePoint> draw_on_level(const Model& model, double h, std::uint64_t seed,
                                        int level, int sample) {
  const PotentialExtrema ext = find_extrema(model.potential);
  const double tie = 1e-12 * std::max(1.0, std::abs(h));
  if (h < ext.v_min - tie) return std::nullopt;

  std::mt19937_64 rng(mix_seed(seed, level, sample));
  const int n = model.dim();
  PhasePoint z = PhasePoint::zero(n);
  for (int i = 0; i < n; ++i) z.x[i] = 2.0 * std::numbers::pi * uniform01(rng);
  const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;

  if (ext.constant || h >= ext.v_max) {
    z.s = uniform01(rng);
    z.p_s = sign * std::sqrt(std::max(0.0, 2.0 * (h - model.potential.value(z.s))));
    return z;
  }

  auto equilibrium = [&]() {
    z.s = ext.argmin.front();
    z.p_s = 0.0;
    return z;
  };
  if (h <= ext.v_min + tie) return equilibrium();

  bool placed = false;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double s = uniform01(rng);
    if (model.potential.value(s) < h) {
      z.s = s;
      placed = true;
      break;
    }
  }
  if (!placed) return equilibrium();

  const double room = h - model.potential.value(z.s);
  TorusVector dir(n);
  for (int i = 0; i < n; ++i) dir[i] = standard_normal(rng);
  const double fraction = 0.9 * uniform01(rng);
  const double quad = dir.dot(model.coupling.q_inv(z.s) * dir);
  if (quad > 0.0) z.p = dir * std::sqrt(2.0 * fraction * room / quad);
  const double gap = h - effective_potential(model, z.p, z.s, 0);
  z.p_s = sign * std::sqrt(std::max(0.0, 2.0 * gap));
  return z;
}

std::vector<ScanRow> entropy_scan_serial(const Model& model, const ScanSpec& spec) {
  validate_scan(spec);
  std::vector<ScanRow> rows;
  const int levels = static_cast<int>(spec.h_grid.size());
  rows.reserve(static_cast<std::size_t>(levels) * spec.samples_per_level);
  for (int level = 0; level < levels; ++level)
    for (int sample = 0; sample < spec.samples_per_level; ++sample)
      rows.push_back(run_sample(model, spec, level, sample));
  return rows;
}

std::vector<ScanRow> entropy_scan(const Model& model, const ScanSpec& spec, int threads) {
  validate_scan(spec);
  const int levels = static_cast<int>(spec.h_grid.size());
  const long tasks = static_cast<long>(levels) * spec.samples_per_level;
  std::vector<ScanRow> rows(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
  for (long task = 0; task < tasks; ++task) {
    const int level = static_cast<int>(task / spec.samples_per_level);
    const int sample = static_cast<int>(task % spec.samples_per_level);
    try {
      rows[task] = run_sample(model, spec, level, sample);
    } catch (...) {
      errors[task] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::ostringstream out;
  out << "h,sample,lambda_final,lambda_half,classification,T,dt,seed\n";
  for (const ScanRow& r : rows) {
    out << format_double(r.h) << ',' << r.sample << ',' << format_double(r.lambda_final) << ','
        << format_double(r.lambda_half) << ',' << to_string(r.classification) << ','
        << format_double(r.horizon) << ',' << format_double(r.dt) << ',' << r.seed << '\n';
  }
  return out.str();
}

double analytic_mle_oracle(const Model& model, double h, const MomentumConstants& c) {
  if (!model.coupling.symmetric()) {
    throw PreconditionError("analytic_mle_oracle: only symmetric A is supported");
  }
  if (c.size() != model.dim() || !c.isZero(0.0)) {
    throw PreconditionError("analytic_mle_oracle: requires c = 0");
  }
  const PotentialExtrema ext = find_extrema(model.potential);
  if (!(h > ext.v_max)) throw PreconditionError("analytic_mle_oracle: requires h > V_max");
  Eigen::SelfAdjointEigenSolver<TorusMatrix> eig(model.coupling.matrix());
  const double rate = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (rate == 0.0) return 0.0;
  return rate / fiber_transit_time(model.potential, h);
}

}  // namespace toric_flow
