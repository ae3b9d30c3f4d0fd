#pragma once

// Scalar diagnostics of a swarm state and of recorded trajectories.
//
// Centered moments (means over agents, deviations from the phase means):
//   X = mean |x_i - x_c|^2, V = mean |v_i - v_c|^2, C = mean dot products.
// Kernel-weighted moments (means over ordered pairs, i = j included):
//   M     = mean Phi(|x_i - x_j|)
//   X_phi = mean phi_ij |x_i - x_j|^2, V_phi likewise for velocities,
//   C_phi = mean phi_ij (x_i - x_j) . (v_i - v_j).
// E = lambda_w X + V + lambda_x M dissipates at rate lambda_v V_phi along
// solutions; K = lambda_w X + alpha C + V obeys an exponential envelope with
// the explicit rate produced by decay_params() whenever the strength/kernel
// condition holds.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "herd/dynamics.hpp"
#include "herd/kernel.hpp"
#include "herd/types.hpp"

namespace herd {

template <class Scalar>
struct DeviationEnergies {
  Scalar X = Scalar(0);
  Scalar V = Scalar(0);
  Scalar C = Scalar(0);
};

template <class Scalar>
struct WeightedFunctionals {
  Scalar M = Scalar(0);
  Scalar X_phi = Scalar(0);
  Scalar V_phi = Scalar(0);
  Scalar C_phi = Scalar(0);
};

template <class Scalar>
struct FunctionalSample {
  Scalar t, X, V, C, M, X_phi, V_phi, C_phi, E, K;
};

template <class Scalar>
DeviationEnergies<Scalar> deviation_energies(const ParticleState<Scalar>& s) {
  const PhaseMean<Scalar> c = center_of_mass(s);
  const Eigen::Index n = s.size(), d = s.dim();
  DeviationEnergies<Scalar> e;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const Scalar dx = s.positions(i, k) - c.x(k);
      const Scalar dv = s.velocities(i, k) - c.v(k);
      e.X += dx * dx;
      e.V += dv * dv;
      e.C += dx * dv;
    }
  }
  e.X /= Scalar(n);
  e.V /= Scalar(n);
  e.C /= Scalar(n);
  return e;
}

template <class Scalar>
WeightedFunctionals<Scalar> weighted_functionals(const ParticleState<Scalar>& s,
                                                 const KernelSpec<Scalar>& k) {
  validate(s);
  const Eigen::Index n = s.size(), d = s.dim();
  WeightedFunctionals<Scalar> w;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Scalar xx = Scalar(0), vv = Scalar(0), xv = Scalar(0);
      for (Eigen::Index kk = 0; kk < d; ++kk) {
        const Scalar dx = s.positions(i, kk) - s.positions(j, kk);
        const Scalar dv = s.velocities(i, kk) - s.velocities(j, kk);
        xx += dx * dx;
        vv += dv * dv;
        xv += dx * dv;
      }
      using std::sqrt;
      const Scalar r = sqrt(xx);
      const Scalar phi = eval_phi(k, r);
      w.M += eval_potential(k, r);
      w.X_phi += phi * xx;
      w.V_phi += phi * vv;
      w.C_phi += phi * xv;
    }
  }
  const Scalar n2 = Scalar(n) * Scalar(n);
  w.M /= n2;
  w.X_phi /= n2;
  w.V_phi /= n2;
  w.C_phi /= n2;
  return w;
}

template <class Scalar>
Scalar herding_energy(const ParticleState<Scalar>& s, const ModelParams<Scalar>& p,
                      const KernelSpec<Scalar>& k) {
  const DeviationEnergies<Scalar> e = deviation_energies(s);
  const WeightedFunctionals<Scalar> w = weighted_functionals(s, k);
  return p.lambda_w * e.X + e.V + p.lambda_x * w.M;
}

// One row of the functional series. alpha weights the cross term in K; pass
// the value from decay_params() when it exists, 0 otherwise (K then reduces
// to lambda_w X + V).
template <class Scalar>
FunctionalSample<Scalar> sample_functionals(const ParticleState<Scalar>& s,
                                            const ModelParams<Scalar>& p,
                                            const KernelSpec<Scalar>& k, Scalar alpha) {
  const DeviationEnergies<Scalar> e = deviation_energies(s);
  const WeightedFunctionals<Scalar> w = weighted_functionals(s, k);
  FunctionalSample<Scalar> f;
  f.t = s.t;
  f.X = e.X;
  f.V = e.V;
  f.C = e.C;
  f.M = w.M;
  f.X_phi = w.X_phi;
  f.V_phi = w.V_phi;
  f.C_phi = w.C_phi;
  f.E = p.lambda_w * e.X + e.V + p.lambda_x * w.M;
  f.K = p.lambda_w * e.X + alpha * e.C + e.V;
  return f;
}

template <class Scalar>
std::vector<FunctionalSample<Scalar>> functional_series(const Trajectory<Scalar>& traj,
                                                        Scalar alpha) {
  std::vector<FunctionalSample<Scalar>> out;
  out.reserve(traj.states.size());
  for (const auto& s : traj.states) {
    out.push_back(sample_functionals(s, traj.params, traj.kernel, alpha));
  }
  return out;
}

// Explicit decay-rate package for the weighted Lyapunov functional K.
// theta and alpha come from the kernel bounds and strengths; delta is picked
// a fixed 1% inside its admissible interval, whose upper endpoint solves
// delta/(1-delta) = 2 sqrt(lambda_w)/alpha. beta > 0 exactly when the
// strength/kernel smallness condition holds (condition_holds reports it).
template <class Scalar>
struct DecayParams {
  Scalar lambda_w, lambda_x, lambda_v;
  Scalar phi_min, phi_max;
  Scalar theta, alpha, delta, beta;
  Scalar c12_lhs, c12_rhs;  // condition: lhs < rhs
  bool condition_holds;
};

template <class Scalar>
struct ConditionC12 {
  Scalar lhs, rhs, margin;  // margin = rhs - lhs, positive when the condition holds
  bool holds;
};

template <class Scalar>
DecayParams<Scalar> decay_params(const ModelParams<Scalar>& p, Scalar phi_min, Scalar phi_max) {
  validate(p);
  if (p.lambda_x <= Scalar(0)) {
    throw std::invalid_argument(
        "decay_params: lambda_x must be positive; with lambda_x == 0 no weighted decay rate "
        "exists, use the rate-free herding pathway instead");
  }
  if (p.lambda_v <= Scalar(0) || p.lambda_w <= Scalar(0)) {
    throw std::invalid_argument("decay_params: lambda_v and lambda_w must be positive");
  }
  if (!(phi_max > Scalar(0)) || !(phi_min >= Scalar(0)) || phi_min > phi_max) {
    throw std::invalid_argument("decay_params: need 0 <= phi_min <= phi_max and phi_max > 0");
  }
  using std::sqrt;
  DecayParams<Scalar> d;
  d.lambda_w = p.lambda_w;
  d.lambda_x = p.lambda_x;
  d.lambda_v = p.lambda_v;
  d.phi_min = phi_min;
  d.phi_max = phi_max;
  d.theta = std::min(Scalar(1), phi_max) / Scalar(2);
  d.alpha = Scalar(2) * p.lambda_x /
            (p.lambda_v * (Scalar(1) + Scalar(2) * d.theta * p.lambda_w / (phi_max * p.lambda_x)));
  d.c12_rhs = d.theta;
  d.c12_lhs = phi_min > Scalar(0)
                  ? phi_max * p.lambda_x * p.lambda_x /
                        (phi_min * p.lambda_w * p.lambda_v * p.lambda_v)
                  : std::numeric_limits<Scalar>::infinity();
  d.condition_holds = d.c12_lhs < d.c12_rhs;
  const Scalar two_sqrt_lw = Scalar(2) * sqrt(p.lambda_w);
  d.delta = Scalar(0.99) * two_sqrt_lw / (d.alpha + two_sqrt_lw);
  const Scalar gain = phi_min > Scalar(0)
                          ? d.theta * p.lambda_w * p.lambda_v * p.lambda_v * phi_min /
                                (phi_max * p.lambda_x * p.lambda_x)
                          : Scalar(0);
  d.beta = std::min(Scalar(1) - d.theta, gain - Scalar(1)) * d.alpha * d.delta;
  return d;
}

template <class Scalar>
ConditionC12<Scalar> check_condition_c12(const ModelParams<Scalar>& p, Scalar phi_min,
                                         Scalar phi_max) {
  validate(p);
  if (!(phi_min > Scalar(0))) {
    throw std::invalid_argument(
        "check_condition_c12: phi_min must be positive, otherwise the hypothesis does not apply");
  }
  if (!(phi_max >= phi_min)) {
    throw std::invalid_argument("check_condition_c12: need phi_max >= phi_min");
  }
  if (p.lambda_x <= Scalar(0) || p.lambda_v <= Scalar(0) || p.lambda_w <= Scalar(0)) {
    throw std::invalid_argument("check_condition_c12: all strengths must be positive");
  }
  ConditionC12<Scalar> c;
  c.lhs = phi_max * p.lambda_x * p.lambda_x / (phi_min * p.lambda_w * p.lambda_v * p.lambda_v);
  c.rhs = std::min(Scalar(1), phi_max) / Scalar(2);
  c.margin = c.rhs - c.lhs;
  c.holds = c.lhs < c.rhs;
  return c;
}

// Central-difference residuals of the four balance identities along a
// recorded trajectory:
//   (i)   dX/dt = 2 C
//   (ii)  dV/dt = -2 lambda_w C - lambda_x C_phi - lambda_v V_phi
//   (iii) dM/dt = C_phi
//   (iv)  dC/dt = V - lambda_w X - (lambda_x/2) X_phi - (lambda_v/2) C_phi
// Residuals are O(h^2) in the recorded spacing h. The relative number for an
// identity is its max residual divided by the sup of |right side| along the
// run; an identically zero right side with zero residual reports 0.
template <class Scalar>
struct DerivativeResiduals {
  Scalar max_abs[4];
  Scalar max_rel[4];
  Scalar scale[4];  // sup |rhs| per identity
};

namespace detail {

template <class Scalar>
Scalar rel_of(Scalar abs_resid, Scalar scale) {
  if (scale > Scalar(0)) return abs_resid / scale;
  return abs_resid == Scalar(0) ? Scalar(0) : std::numeric_limits<Scalar>::infinity();
}

}  // namespace detail

template <class Scalar>
DerivativeResiduals<Scalar> derivative_residuals(const Trajectory<Scalar>& traj) {
  if (traj.states.size() < 3) {
    throw std::invalid_argument("derivative_residuals: need at least three recorded states");
  }
  const Scalar h = traj.dt * Scalar(traj.record_every);
  const auto series = functional_series(traj, Scalar(0));
  const auto& p = traj.params;

  DerivativeResiduals<Scalar> r;
  for (int k = 0; k < 4; ++k) {
    r.max_abs[k] = Scalar(0);
    r.scale[k] = Scalar(0);
  }
  using std::abs;
  for (std::size_t j = 1; j + 1 < series.size(); ++j) {
    const auto& fm = series[j - 1];
    const auto& f0 = series[j];
    const auto& fp = series[j + 1];
    const Scalar rhs[4] = {
        Scalar(2) * f0.C,
        -Scalar(2) * p.lambda_w * f0.C - p.lambda_x * f0.C_phi - p.lambda_v * f0.V_phi,
        f0.C_phi,
        f0.V - p.lambda_w * f0.X - p.lambda_x / Scalar(2) * f0.X_phi -
            p.lambda_v / Scalar(2) * f0.C_phi,
    };
    const Scalar cd[4] = {
        (fp.X - fm.X) / (Scalar(2) * h),
        (fp.V - fm.V) / (Scalar(2) * h),
        (fp.M - fm.M) / (Scalar(2) * h),
        (fp.C - fm.C) / (Scalar(2) * h),
    };
    for (int k = 0; k < 4; ++k) {
      r.max_abs[k] = std::max(r.max_abs[k], abs(cd[k] - rhs[k]));
      r.scale[k] = std::max(r.scale[k], abs(rhs[k]));
    }
  }
  for (int k = 0; k < 4; ++k) r.max_rel[k] = detail::rel_of(r.max_abs[k], r.scale[k]);
  return r;
}

// Residual of the dissipation identity dE/dt = -lambda_v V_phi, same
// central-difference and normalization conventions as above.
template <class Scalar>
struct DissipationResidual {
  Scalar max_abs = Scalar(0);
  Scalar max_rel = Scalar(0);
  Scalar scale = Scalar(0);
};

template <class Scalar>
DissipationResidual<Scalar> energy_dissipation_residual(const Trajectory<Scalar>& traj) {
  if (traj.states.size() < 3) {
    throw std::invalid_argument("energy_dissipation_residual: need at least three recorded states");
  }
  const Scalar h = traj.dt * Scalar(traj.record_every);
  const auto series = functional_series(traj, Scalar(0));
  DissipationResidual<Scalar> r;
  using std::abs;
  for (std::size_t j = 1; j + 1 < series.size(); ++j) {
    const Scalar rhs = -traj.params.lambda_v * series[j].V_phi;
    const Scalar cd = (series[j + 1].E - series[j - 1].E) / (Scalar(2) * h);
    r.max_abs = std::max(r.max_abs, abs(cd - rhs));
    r.scale = std::max(r.scale, abs(rhs));
  }
  r.max_rel = detail::rel_of(r.max_abs, r.scale);
  return r;
}

}  // namespace herd
