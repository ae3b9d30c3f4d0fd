#pragma once

// N-agent herding dynamics
//
//   dx_i/dt = v_i
//   dv_i/dt = (lambda_x/N) sum_j phi(|x_j-x_i|)(x_j-x_i)
//           + (lambda_v/N) sum_j phi(|x_j-x_i|)(v_j-v_i)
//           + lambda_w (x_c - x_i),      x_c = mean position (market signal)
//
// integrated with a fixed-step classical RK4. All pairwise sums run over j
// in ascending index order and the mean is a sequential sum, so results are
// reproducible bit for bit on a given build regardless of how callers
// parallelize across independent runs.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "herd/kernel.hpp"
#include "herd/types.hpp"

namespace herd {

template <class Scalar>
struct PhaseMean {
  Vec<Scalar> x;
  Vec<Scalar> v;
};

template <class Scalar>
struct SupportRadii {
  Scalar position = Scalar(0);  // max_i |x_i - x_c|
  Scalar velocity = Scalar(0);  // max_i |v_i - v_c|
};

template <class Scalar>
struct PhasePoint {
  Vec<Scalar> x;
  Vec<Scalar> v;
};

// Mean-position / mean-velocity decomposition of the force on one agent
// under unit interaction strengths: q = a + b - (1+c) x_i - c v_i.
template <class Scalar>
struct ForceDecomposition {
  Vec<Scalar> a;  // mean position
  Vec<Scalar> b;  // kernel-weighted mean of x_j + v_j
  Scalar c;       // kernel-weighted mean of 1
  Vec<Scalar> q;  // reconstructed force
};

template <class Scalar>
struct Trajectory {
  ModelParams<Scalar> params;
  KernelSpec<Scalar> kernel;
  Scalar dt = Scalar(0);          // integrator step
  Eigen::Index record_every = 1;  // recorded spacing is dt * record_every
  std::vector<ParticleState<Scalar>> states;
};

using Trajectoryd = Trajectory<double>;

namespace detail {

// Sequential column means, fixed summation order.
template <class Scalar>
Vec<Scalar> column_means(const Mat<Scalar>& m) {
  const Eigen::Index n = m.rows(), d = m.cols();
  Vec<Scalar> out = Vec<Scalar>::Zero(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Scalar s = Scalar(0);
    for (Eigen::Index i = 0; i < n; ++i) s += m(i, k);
    out(k) = s / Scalar(n);
  }
  return out;
}

// Force at one phase point (x, v) against the agents in (xt, vt), which are
// d x N transposed copies so each agent is a contiguous column. xc is the
// mean position of the background. Both accelerations() and the tracer call
// this, which is what makes an atom-launched tracer coincide bitwise with
// the atom's own path.
template <class Scalar>
void force_at(const Scalar* x, const Scalar* v, const Mat<Scalar>& xt, const Mat<Scalar>& vt,
              const Vec<Scalar>& xc, const ModelParams<Scalar>& p, const KernelSpec<Scalar>& k,
              Scalar* out) {
  const Eigen::Index d = xt.rows(), n = xt.cols();
  for (Eigen::Index kk = 0; kk < d; ++kk) out[kk] = Scalar(0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar* xj = xt.data() + j * d;
    const Scalar* vj = vt.data() + j * d;
    Scalar r2 = Scalar(0);
    for (Eigen::Index kk = 0; kk < d; ++kk) {
      const Scalar dx = xj[kk] - x[kk];
      r2 += dx * dx;
    }
    const Scalar w = eval_phi_sq(k, r2);
    for (Eigen::Index kk = 0; kk < d; ++kk) {
      out[kk] += w * (p.lambda_x * (xj[kk] - x[kk]) + p.lambda_v * (vj[kk] - v[kk]));
    }
  }
  const Scalar inv_n = Scalar(1) / Scalar(n);
  for (Eigen::Index kk = 0; kk < d; ++kk) {
    out[kk] = out[kk] * inv_n + p.lambda_w * (xc(kk) - x[kk]);
  }
}

}  // namespace detail

template <class Scalar>
PhaseMean<Scalar> center_of_mass(const ParticleState<Scalar>& s) {
  validate(s);
  return {detail::column_means(s.positions), detail::column_means(s.velocities)};
}

template <class Scalar>
SupportRadii<Scalar> support_radii(const ParticleState<Scalar>& s) {
  const PhaseMean<Scalar> c = center_of_mass(s);
  SupportRadii<Scalar> r;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    r.position = std::max(r.position, Scalar((s.positions.row(i).transpose() - c.x).norm()));
    r.velocity = std::max(r.velocity, Scalar((s.velocities.row(i).transpose() - c.v).norm()));
  }
  return r;
}

// Right side of the velocity equation for every agent, N x d.
template <class Scalar>
Mat<Scalar> accelerations(const ParticleState<Scalar>& s, const ModelParams<Scalar>& p,
                          const KernelSpec<Scalar>& k) {
  validate(s);
  validate(p);
  const Eigen::Index n = s.size(), d = s.dim();
  const Mat<Scalar> xt = s.positions.transpose();
  const Mat<Scalar> vt = s.velocities.transpose();
  const Vec<Scalar> xc = detail::column_means(s.positions);
  Mat<Scalar> out(n, d);
  std::vector<Scalar> row(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    detail::force_at(xt.data() + i * d, vt.data() + i * d, xt, vt, xc, p, k, row.data());
    for (Eigen::Index kk = 0; kk < d; ++kk) out(i, kk) = row[kk];
  }
  return out;
}

// Mean-field force at an arbitrary phase point against the empirical measure
// carried by `s` (the point itself contributes a zero pairwise term when it
// coincides with an agent).
template <class Scalar>
Vec<Scalar> mean_field_force(const Vec<Scalar>& x, const Vec<Scalar>& v,
                             const ParticleState<Scalar>& s, const ModelParams<Scalar>& p,
                             const KernelSpec<Scalar>& k) {
  validate(s);
  validate(p);
  if (x.size() != s.dim() || v.size() != s.dim()) {
    throw std::invalid_argument("mean_field_force: probe dimension mismatch");
  }
  const Mat<Scalar> xt = s.positions.transpose();
  const Mat<Scalar> vt = s.velocities.transpose();
  const Vec<Scalar> xc = detail::column_means(s.positions);
  Vec<Scalar> out(s.dim());
  detail::force_at(x.data(), v.data(), xt, vt, xc, p, k, out.data());
  return out;
}

// Splits the unit-strength force on agent i into the mean position a, the
// kernel-weighted mean b of x_j + v_j, and the kernel mass c, so that
// q = a + b - (1+c) x_i - c v_i. The reconstruction matches accelerations()
// under unit strengths up to roundoff.
template <class Scalar>
ForceDecomposition<Scalar> force_decomposition(const ParticleState<Scalar>& s, Eigen::Index i,
                                               const KernelSpec<Scalar>& k) {
  validate(s);
  if (i < 0 || i >= s.size()) throw std::out_of_range("force_decomposition: agent index");
  const Eigen::Index n = s.size(), d = s.dim();
  const Vec<Scalar> xi = s.positions.row(i).transpose();
  const Vec<Scalar> vi = s.velocities.row(i).transpose();
  ForceDecomposition<Scalar> f;
  f.a = detail::column_means(s.positions);
  f.b = Vec<Scalar>::Zero(d);
  f.c = Scalar(0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar r = (s.positions.row(j).transpose() - xi).norm();
    const Scalar w = eval_phi(k, r);
    f.b += w * (s.positions.row(j) + s.velocities.row(j)).transpose();
    f.c += w;
  }
  f.b /= Scalar(n);
  f.c /= Scalar(n);
  f.q = f.a + f.b - (Scalar(1) + f.c) * xi - f.c * vi;
  return f;
}

namespace detail {

// Stage states and slopes of one classical RK4 step. Kept as a named struct
// so the characteristic tracer can ride along the exact same stages.
template <class Scalar>
struct Rk4Stages {
  ParticleState<Scalar> s2, s3, s4;
  Mat<Scalar> a1, a2, a3, a4;
};

template <class Scalar>
Rk4Stages<Scalar> rk4_stages(const ParticleState<Scalar>& s, const ModelParams<Scalar>& p,
                             const KernelSpec<Scalar>& k, Scalar dt) {
  auto accel_or = [&](const ParticleState<Scalar>& st, const char* stage) {
    try {
      return accelerations(st, p, k);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("step_rk4: invalid state at stage ") + stage +
                               " (t=" + std::to_string(double(s.t)) + "): " + e.what());
    }
  };
  const Scalar h2 = dt / Scalar(2);
  Rk4Stages<Scalar> st;
  st.a1 = accel_or(s, "k1");
  st.s2 = {s.t + h2, s.positions + h2 * s.velocities, s.velocities + h2 * st.a1};
  st.a2 = accel_or(st.s2, "k2");
  st.s3 = {s.t + h2, s.positions + h2 * st.s2.velocities, s.velocities + h2 * st.a2};
  st.a3 = accel_or(st.s3, "k3");
  st.s4 = {s.t + dt, s.positions + dt * st.s3.velocities, s.velocities + dt * st.a3};
  st.a4 = accel_or(st.s4, "k4");
  return st;
}

// The increment is averaged before scaling by dt. With equal stage slopes
// (consensus, free streaming) the average is exact, so one step advances
// positions by exactly dt * v.
template <class Scalar>
ParticleState<Scalar> rk4_combine(const ParticleState<Scalar>& s, const Rk4Stages<Scalar>& st,
                                  Scalar dt) {
  ParticleState<Scalar> out;
  out.t = s.t + dt;
  out.positions = s.positions +
                  dt * ((s.velocities + Scalar(2) * st.s2.velocities +
                         Scalar(2) * st.s3.velocities + st.s4.velocities) /
                        Scalar(6));
  out.velocities = s.velocities +
                   dt * ((st.a1 + Scalar(2) * st.a2 + Scalar(2) * st.a3 + st.a4) / Scalar(6));
  return out;
}

}  // namespace detail

template <class Scalar>
ParticleState<Scalar> step_rk4(const ParticleState<Scalar>& s, const ModelParams<Scalar>& p,
                               const KernelSpec<Scalar>& k, Scalar dt) {
  if (!(dt > Scalar(0)) || !std::isfinite(double(dt))) {
    throw std::invalid_argument("step_rk4: dt must be finite and positive");
  }
  return detail::rk4_combine(s, detail::rk4_stages(s, p, k, dt), dt);
}

// Integrates from init to t_end and records every record_every-th state,
// the initial state included. The step count must be a whole multiple of
// record_every so recorded states stay uniformly spaced; times are laid out
// as init.t + k*dt rather than accumulated, so the grid is exact to
// roundoff. t_end must sit within half a step of the grid.
template <class Scalar>
Trajectory<Scalar> simulate(const ParticleState<Scalar>& init, const ModelParams<Scalar>& p,
                            const KernelSpec<Scalar>& k, Scalar dt, Scalar t_end,
                            Eigen::Index record_every = 1) {
  validate(init);
  validate(p);
  require_admissible(k);
  if (!(dt > Scalar(0)) || !std::isfinite(double(dt))) {
    throw std::invalid_argument("simulate: dt must be finite and positive");
  }
  if (record_every < 1) throw std::invalid_argument("simulate: record_every must be >= 1");
  const double span = double(t_end) - double(init.t);
  const long long n_steps = std::llround(span / double(dt));
  if (n_steps < 1 || std::abs(double(n_steps) * double(dt) - span) > 0.5 * double(dt)) {
    throw std::invalid_argument("simulate: t_end must be at least one step past init.t and dt must divide the horizon");
  }
  if (n_steps % record_every != 0) {
    throw std::invalid_argument("simulate: record_every must divide the step count so recorded states stay uniform");
  }

  Trajectory<Scalar> traj;
  traj.params = p;
  traj.kernel = k;
  traj.dt = dt;
  traj.record_every = record_every;
  traj.states.reserve(static_cast<std::size_t>(n_steps / record_every) + 1);
  traj.states.push_back(init);

  ParticleState<Scalar> cur = init;
  for (long long step = 1; step <= n_steps; ++step) {
    cur = step_rk4(cur, p, k, dt);
    cur.t = init.t + Scalar(step) * dt;
    if (step % record_every == 0) traj.states.push_back(cur);
  }
  return traj;
}

// Integrates one bi-characteristic (X, V) of the mean-field field carried by
// a recorded trajectory: dX/ds = V, dV/ds = Q(X, V, mu_s). The background is
// re-integrated from the recorded state at t0 with the trajectory's own step
// size, and the tracer shares the background's RK4 stages, so a tracer
// launched from an agent's own phase point reproduces that agent's path to
// the bit. t0 must lie on the recorded grid; t1 may be anywhere in
// [t0, final time].
template <class Scalar>
PhasePoint<Scalar> trace_characteristic(const Trajectory<Scalar>& traj, Scalar t0,
                                        const Vec<Scalar>& x0, const Vec<Scalar>& v0, Scalar t1) {
  if (traj.states.empty()) throw std::invalid_argument("trace_characteristic: empty trajectory");
  const Scalar t_final = traj.states.back().t;
  const Scalar tol = Scalar(1e-9);
  if (!(t1 >= t0 - tol) || t1 > t_final + tol) {
    throw std::invalid_argument("trace_characteristic: need t0 <= t1 <= final time");
  }
  const Eigen::Index d = traj.states.front().dim();
  if (x0.size() != d || v0.size() != d) {
    throw std::invalid_argument("trace_characteristic: tracer dimension mismatch");
  }

  // Locate t0 on the recorded grid.
  const Scalar spacing = traj.dt * Scalar(traj.record_every);
  const Scalar first_t = traj.states.front().t;
  const auto idx = static_cast<std::ptrdiff_t>(std::llround(double((t0 - first_t) / spacing)));
  if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(traj.states.size()) ||
      std::abs(double(first_t + Scalar(idx) * spacing - t0)) > double(tol)) {
    throw std::invalid_argument("trace_characteristic: t0 must lie on the recorded time grid");
  }

  ParticleState<Scalar> bg = traj.states[static_cast<std::size_t>(idx)];
  PhasePoint<Scalar> tr{x0, v0};

  auto joint_step = [&](Scalar h) {
    const detail::Rk4Stages<Scalar> st = detail::rk4_stages(bg, traj.params, traj.kernel, h);
    const Scalar h2 = h / Scalar(2);
    const Mat<Scalar> xt1 = bg.positions.transpose(), vt1 = bg.velocities.transpose();
    const Vec<Scalar> xc1 = detail::column_means(bg.positions);
    Vec<Scalar> q1(d), q2(d), q3(d), q4(d);
    detail::force_at(tr.x.data(), tr.v.data(), xt1, vt1, xc1, traj.params, traj.kernel, q1.data());

    const Vec<Scalar> x2 = tr.x + h2 * tr.v, v2 = tr.v + h2 * q1;
    const Mat<Scalar> xt2 = st.s2.positions.transpose(), vt2 = st.s2.velocities.transpose();
    const Vec<Scalar> xc2 = detail::column_means(st.s2.positions);
    detail::force_at(x2.data(), v2.data(), xt2, vt2, xc2, traj.params, traj.kernel, q2.data());

    const Vec<Scalar> x3 = tr.x + h2 * v2, v3 = tr.v + h2 * q2;
    const Mat<Scalar> xt3 = st.s3.positions.transpose(), vt3 = st.s3.velocities.transpose();
    const Vec<Scalar> xc3 = detail::column_means(st.s3.positions);
    detail::force_at(x3.data(), v3.data(), xt3, vt3, xc3, traj.params, traj.kernel, q3.data());

    const Vec<Scalar> x4 = tr.x + h * v3, v4 = tr.v + h * q3;
    const Mat<Scalar> xt4 = st.s4.positions.transpose(), vt4 = st.s4.velocities.transpose();
    const Vec<Scalar> xc4 = detail::column_means(st.s4.positions);
    detail::force_at(x4.data(), v4.data(), xt4, vt4, xc4, traj.params, traj.kernel, q4.data());

    PhasePoint<Scalar> next;
    next.x = tr.x + h * ((tr.v + Scalar(2) * v2 + Scalar(2) * v3 + v4) / Scalar(6));
    next.v = tr.v + h * ((q1 + Scalar(2) * q2 + Scalar(2) * q3 + q4) / Scalar(6));
    tr = std::move(next);
    bg = detail::rk4_combine(bg, st, h);
  };

  const double span = double(t1 - t0);
  const long long n_full = static_cast<long long>(std::floor(span / double(traj.dt) + 1e-9));
  for (long long step = 0; step < n_full; ++step) {
    joint_step(traj.dt);
    bg.t = t0 + Scalar(step + 1) * traj.dt;
  }
  const Scalar rem = Scalar(span - double(n_full) * double(traj.dt));
  if (double(rem) > 1e-12 * std::max(1.0, std::abs(double(t1)))) joint_step(rem);
  return tr;
}

}  // namespace herd
