#include "toric_flow/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "toric_flow/errors.hpp"

namespace toric_flow {
namespace {

// Yoshida triple jump: gamma1 + gamma2 + gamma1 = 1.
const double kJumpOuter = 1.0 / (2.0 - std::cbrt(2.0));
const double kJumpInner = 1.0 - 2.0 * kJumpOuter;

double fiber_force(const Model& m, const TorusMatrix& qi, const PhasePoint& z, double s) {
  return z.p.dot(m.coupling.matrix() * (qi * z.p)) - m.potential.slope(s);
}

PhaseMatrix jacobian_at(const Model& m, const TorusMatrix& qi, const TorusVector& p,
                        double s) {
  const int n = m.dim();
  const PhaseLayout l{n};
  const TorusMatrix& a = m.coupling.matrix();
  const TorusMatrix a_qi = a * qi;
  const TorusMatrix dqi = -(a_qi + qi * a.transpose());

  PhaseMatrix j = PhaseMatrix::Zero(l.size(), l.size());
  j.block(0, l.p(0), n, n) = qi;
  j.block(0, l.s(), n, 1) = dqi * p;
  j(l.s(), l.p_s()) = 1.0;
  j.block(l.p_s(), l.p(0), 1, n) = ((a_qi + qi * a.transpose()) * p).transpose();
  j(l.p_s(), l.s()) = p.dot(a * (dqi * p)) - m.potential.curvature(s);
  return j;
}

bool close(double next, double prev, double tol) {
  return std::abs(next - prev) <= tol * std::max(1.0, std::abs(next));
}

PhasePoint midpoint_step(const Model& m, const PhasePoint& z, double dt,
                         const IntegratorConfig& cfg, PhaseMatrix* frames) {
  const double half = 0.5 * dt;
  double s_mid = z.s + half * z.p_s;
  double ps_mid = z.p_s + half * fiber_force(m, m.coupling.q_inv(z.s), z, z.s);

  bool converged = false;
  double residual = 0.0;
  for (int it = 0; it < cfg.max_fixed_point_iters; ++it) {
    const double ps_next = z.p_s + half * fiber_force(m, m.coupling.q_inv(s_mid), z, s_mid);
    const double s_next = z.s + half * ps_next;
    residual = std::max(std::abs(s_next - s_mid), std::abs(ps_next - ps_mid));
    const bool done = close(s_next, s_mid, cfg.fixed_point_tol) &&
                      close(ps_next, ps_mid, cfg.fixed_point_tol);
    s_mid = s_next;
    ps_mid = ps_next;
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged || !std::isfinite(s_mid) || !std::isfinite(ps_mid)) {
    std::ostringstream msg;
    msg << "implicit midpoint: fixed-point iteration did not converge in "
        << cfg.max_fixed_point_iters << " iterations (dt = " << dt
        << ", residual = " << residual << ")";
    throw StepFailure(msg.str(), residual, std::nan(""));
  }

  const TorusMatrix qi = m.coupling.q_inv(s_mid);
  PhasePoint out;
  out.x = z.x + dt * (qi * z.p);
  out.s = z.s + dt * ps_mid;
  out.p = z.p;
  out.p_s = z.p_s + dt * fiber_force(m, qi, z, s_mid);

  if (frames != nullptr) {
    const PhaseMatrix j = jacobian_at(m, qi, z.p, s_mid);
    const PhaseMatrix id = PhaseMatrix::Identity(j.rows(), j.cols());
    const PhaseMatrix lhs = id - half * j;
    const PhaseMatrix rhs = (id + half * j) * (*frames);
    *frames = lhs.partialPivLu().solve(rhs);
  }
  return out;
}

PhaseVector packed_field(const Model& m, const PhasePoint& z) {
  const FlowDerivative f = vector_field(m, z);
  const int n = m.dim();
  PhaseVector v(2 * n + 2);
  v.head(n) = f.dx;
  v[n] = f.ds;
  v.segment(n + 1, n) = f.dp;
  v[2 * n + 1] = f.dp_s;
  return v;
}

PhasePoint rk4_step(const Model& m, const PhasePoint& z, double dt, PhaseMatrix* frames) {
  const int n = m.dim();
  const PhaseVector y = z.pack();
  auto at = [&](const PhaseVector& v) { return PhasePoint::unpack(v, n); };

  const PhasePoint z1 = z;
  const PhaseVector k1 = packed_field(m, z1);
  const PhasePoint z2 = at(y + 0.5 * dt * k1);
  const PhaseVector k2 = packed_field(m, z2);
  const PhasePoint z3 = at(y + 0.5 * dt * k2);
  const PhaseVector k3 = packed_field(m, z3);
  const PhasePoint z4 = at(y + dt * k3);
  const PhaseVector k4 = packed_field(m, z4);

  PhasePoint out = at(y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  out.p = z.p;

  if (frames != nullptr) {
    const PhaseMatrix& f = *frames;
    const PhaseMatrix l1 = flow_jacobian(m, z1) * f;
    const PhaseMatrix l2 = flow_jacobian(m, z2) * (f + 0.5 * dt * l1);
    const PhaseMatrix l3 = flow_jacobian(m, z3) * (f + 0.5 * dt * l2);
    const PhaseMatrix l4 = flow_jacobian(m, z4) * (f + dt * l3);
    *frames = f + (dt / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
  }
  return out;
}

double momentum_deviation(const TorusVector& p, const TorusVector& ref) {
  return (p - ref).cwiseAbs().maxCoeff();
}

}  // namespace

Model::Model(CouplingMatrix a, FourierPotential v, Topology t)
    : coupling(std::move(a)), potential(std::move(v)), topology(t) {
  if (topology == Topology::Suspension && !coupling.automorphism().ok) {
    throw PreconditionError("suspension mode requires an integer automorphism exp(A): " +
                            coupling.automorphism().diagnostic);
  }
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("integrator: dt must be > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
    throw InvalidArgument("integrator: t_end must be >= 0");
  }
  if (t_end > 0.0 && dt > t_end) throw InvalidArgument("integrator: dt exceeds t_end");
  if (!(fixed_point_tol > 0.0)) throw InvalidArgument("integrator: fixed_point_tol must be > 0");
  if (max_fixed_point_iters < 1) {
    throw InvalidArgument("integrator: max_fixed_point_iters must be >= 1");
  }
}

FlowDerivative vector_field(const Model& model, const PhasePoint& z) {
  if (!z.finite()) throw InvalidArgument("vector_field: non-finite phase point");
  const TorusMatrix qi = model.coupling.q_inv(z.s);
  if (!qi.allFinite()) throw RangeError("vector_field: Q(s)^-1 overflowed");
  FlowDerivative f;
  f.dx = qi * z.p;
  f.ds = z.p_s;
  f.dp = TorusVector::Zero(z.dim());
  f.dp_s = fiber_force(model, qi, z, z.s);
  return f;
}

PhaseMatrix flow_jacobian(const Model& model, const PhasePoint& z) {
  if (!z.finite()) throw InvalidArgument("flow_jacobian: non-finite phase point");
  return jacobian_at(model, model.coupling.q_inv(z.s), z.p, z.s);
}

PhasePoint step(const Model& model, const PhasePoint& z, const IntegratorConfig& cfg) {
  return step(model, z, cfg.dt, cfg, nullptr);
}

PhasePoint step(const Model& model, const PhasePoint& z, double dt,
                const IntegratorConfig& cfg, PhaseMatrix* frames) {
  switch (cfg.method) {
    case Method::ImplicitMidpoint:
      return midpoint_step(model, z, dt, cfg, frames);
    case Method::ImplicitMidpoint4: {
      PhasePoint w = midpoint_step(model, z, kJumpOuter * dt, cfg, frames);
      w = midpoint_step(model, w, kJumpInner * dt, cfg, frames);
      return midpoint_step(model, w, kJumpOuter * dt, cfg, frames);
    }
    case Method::RK4:
      return rk4_step(model, z, dt, frames);
  }
  throw InvalidArgument("step: unknown method");
}

double Trajectory::relative_energy_drift() const {
  return max_energy_drift / std::max(std::abs(h0), 1.0);
}

int maybe_wrap(const Model& model, PhasePoint& z, PhaseMatrix* frames) {
  if (model.topology != Topology::Suspension) return 0;
  if (z.s >= kWrapLow && z.s < kWrapHigh) return 0;
  const WrappedPoint w = wrap_to_fundamental(model.coupling, z);
  z = w.point;
  if (frames != nullptr) {
    for (Eigen::Index c = 0; c < frames->cols(); ++c) {
      frames->col(c) = deck_push_tangent(model.coupling, frames->col(c), w.k);
    }
  }
  return w.k;
}

namespace {

Trajectory run(const Model& model, const PhasePoint& z0, const IntegratorConfig& cfg,
               const IntegrateOptions& opts, PhaseMatrix* frames,
               std::vector<PhaseMatrix>* frame_samples) {
  cfg.validate();
  if (z0.dim() != model.dim()) throw InvalidArgument("integrate: dimension mismatch");
  Trajectory traj;
  traj.h0 = model.energy(z0);
  if (!std::isfinite(traj.h0)) throw InvalidArgument("integrate: H(z0) is not finite");

  const long stride = std::max<long>(1, opts.sample_stride);
  const long steps = cfg.t_end == 0.0
                         ? 0
                         : static_cast<long>(std::ceil(cfg.t_end / cfg.dt - 1e-9));

  auto record = [&](double t, const PhasePoint& z, double dh, double dp) {
    traj.times.push_back(t);
    traj.samples.push_back(z);
    traj.energy_drift.push_back(dh);
    traj.momentum_drift.push_back(dp);
    if (frame_samples != nullptr) frame_samples->push_back(*frames);
  };

  PhasePoint z = z0;
  TorusVector p_ref = z0.p;
  record(0.0, z, 0.0, 0.0);

  for (long k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * cfg.dt;
    const double t = static_cast<double>(k) * cfg.dt;
    PhasePoint next;
    try {
      next = step(model, z, cfg.dt, cfg, frames);
    } catch (const StepFailure& e) {
      std::ostringstream msg;
      msg << e.what() << " at t = " << t_prev;
      throw StepFailure(msg.str(), e.residual(), t_prev);
    }
    if (!next.finite()) {
      throw StepFailure("integration produced a non-finite state at t = " +
                            std::to_string(t_prev),
                        std::nan(""), t_prev);
    }

    bool keep_going = true;
    for (const Observer& obs : opts.observers) {
      keep_going = obs(StepEvent{k, t_prev, z, t, next}) && keep_going;
    }

    const int wrapped = maybe_wrap(model, next, frames);
    if (wrapped != 0) {
      PhasePoint ref = PhasePoint::zero(model.dim());
      ref.p = p_ref;
      p_ref = deck_transform(model.coupling, ref, wrapped).p;
    }
    z = next;

    const double dh = std::abs(model.energy(z) - traj.h0);
    const double dp = momentum_deviation(z.p, p_ref);
    traj.max_energy_drift = std::max(traj.max_energy_drift, dh);
    traj.max_momentum_drift = std::max(traj.max_momentum_drift, dp);

    if (k % stride == 0 || k == steps || !keep_going) record(t, z, dh, dp);
    if (!keep_going) {
      traj.stopped_by_observer = true;
      break;
    }
  }
  return traj;
}

}  // namespace

Trajectory integrate(const Model& model, const PhasePoint& z0, const IntegratorConfig& cfg,
                     const IntegrateOptions& opts) {
  return run(model, z0, cfg, opts, nullptr, nullptr);
}

TangentFlow flow_with_tangents(const Model& model, const PhasePoint& z0,
                               const PhaseMatrix& frames0, const IntegratorConfig& cfg,
                               long sample_stride) {
  const PhaseLayout l{model.dim()};
  if (frames0.rows() != l.size() || frames0.cols() < 1) {
    throw InvalidArgument("flow_with_tangents: frames must have 2n+2 rows");
  }
  Eigen::FullPivLU<PhaseMatrix> lu(frames0);
  if (lu.rank() < frames0.cols()) {
    throw InvalidArgument("flow_with_tangents: tangent frames are linearly dependent");
  }
  TangentFlow out;
  PhaseMatrix frames = frames0;
  IntegrateOptions opts;
  opts.sample_stride = sample_stride;
  out.trajectory = run(model, z0, cfg, opts, &frames, &out.frames);
  return out;
}

}  // namespace toric_flow
