#pragma once

// One-call verification suite for a single run: integrates the system,
// derives kernel bounds from the observed support, and evaluates every
// structural property the theory promises for that run. Checks that need a
// hypothesis the run does not satisfy come back NotApplicable rather than
// failed; all_pass() treats only Fail as failure.

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "herd/dynamics.hpp"
#include "herd/experiments.hpp"
#include "herd/functionals.hpp"
#include "herd/kernel.hpp"
#include "herd/types.hpp"

namespace herd {

struct SuiteOptions {
  double tail_threshold = 0.01;
  int tail_doublings = 8;
  double fit_lo_frac = 0.25;  // fit window as fractions of the horizon
  double fit_hi_frac = 1.0;
  double diameter_headroom = 1.1;  // kernel bounds use observed diameter * headroom
  double tol_v_conservation = 1e-9;
  double tol_x_conservation = 1e-8;
  double tol_energy_step = 1e-10;  // scaled by 1 + E(0)
  double tol_integral = 1e-6;      // relative slack on the V-integral bound
  double tol_envelope = 1e-6;      // relative slack on the K and X envelopes
  double tol_identity = 1e-9;      // relative slack on algebraic identities
  bool run_tail_harness = true;
};

enum class CheckStatus { Pass, Fail, NotApplicable };

struct SuiteCheck {
  std::string name;
  CheckStatus status = CheckStatus::NotApplicable;
  double margin = 0.0;  // nonnegative on pass; meaning documented per check
  std::string detail;
};

struct SuiteReport {
  std::vector<SuiteCheck> checks;
  std::vector<FunctionalSample<double>> series;
  double r_max_used = 0.0;
  double phi_min_used = 0.0;
  double phi_max_used = 0.0;
  std::optional<DecayParams<double>> rate;
  std::optional<DecayFit> fit;
  std::optional<TailDecayResult> tail;
  double tail_x = 0.0;  // X at the end of the base horizon
  double tail_v = 0.0;

  bool all_pass() const {
    for (const auto& c : checks) {
      if (c.status == CheckStatus::Fail) return false;
    }
    return true;
  }
};

namespace detail {

inline std::string fmt_sci(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

inline SuiteReport herding_suite(const ParticleStated& init, const ModelParamsd& params,
                                 const KernelSpecd& kernel, double dt, double t_end,
                                 const SuiteOptions& opt = {}) {
  SuiteReport rep;
  auto add = [&rep](const std::string& name, CheckStatus st, double margin,
                    const std::string& detail) {
    rep.checks.push_back({name, st, margin, detail});
  };
  auto verdict = [](bool ok) { return ok ? CheckStatus::Pass : CheckStatus::Fail; };

  const Trajectory<double> traj = simulate(init, params, kernel, dt, t_end, 1);
  const auto& states = traj.states;

  // Conserved quantities: mean velocity, and mean position up to drift.
  const PhaseMean<double> c0 = center_of_mass(states.front());
  double dev_v = 0.0, dev_x = 0.0;
  double diameter = 0.0;
  for (const auto& s : states) {
    const PhaseMean<double> c = center_of_mass(s);
    dev_v = std::max(dev_v, (c.v - c0.v).norm());
    dev_x = std::max(dev_x, (c.x - c0.x - (s.t - states.front().t) * c0.v).norm());
    diameter = std::max(diameter, 2.0 * support_radii(s).position);
  }
  add("conservation_velocity", verdict(dev_v <= opt.tol_v_conservation),
      opt.tol_v_conservation - dev_v, "max |v_c(t) - v_c(0)| = " + detail::fmt_sci(dev_v));
  add("conservation_center", verdict(dev_x <= opt.tol_x_conservation),
      opt.tol_x_conservation - dev_x,
      "max |x_c(t) - x_c(0) - v_c(0) t| = " + detail::fmt_sci(dev_x));

  // Kernel bounds over everything the run visited, with headroom.
  rep.r_max_used = std::max(diameter * opt.diameter_headroom, 1e-9);
  const KernelBounds<double> kb = kernel_bounds(kernel, rep.r_max_used);
  rep.phi_min_used = kb.phi_min;
  rep.phi_max_used = kb.phi_max;

  try {
    rep.rate = decay_params(params, kb.phi_min, kb.phi_max);
  } catch (const std::invalid_argument&) {
    rep.rate.reset();  // lambda_x == 0 or similar; weighted rate not defined
  }
  const double alpha = rep.rate ? rep.rate->alpha : 0.0;
  rep.series = functional_series(traj, alpha);
  const auto& fs = rep.series;
  const double E0 = fs.front().E;
  rep.tail_x = fs.back().X;
  rep.tail_v = fs.back().V;

  // Energy never increases along the run (up to one-step integrator noise).
  double max_inc = 0.0;
  for (std::size_t j = 0; j + 1 < fs.size(); ++j) {
    max_inc = std::max(max_inc, fs[j + 1].E - fs[j].E);
  }
  const double e_tol = opt.tol_energy_step * (1.0 + E0);
  add("energy_monotone", verdict(max_inc <= e_tol), e_tol - max_inc,
      "max per-step E increase = " + detail::fmt_sci(max_inc));

  // Algebraic identities of the functional samples.
  {
    double viol_cs = 0.0, scale_cs = 0.0;
    double viol_sw = 0.0, scale_sw = 0.0;
    double viol_kp = 0.0, scale_kp = 0.0;
    const double floor_k = params.lambda_w - alpha * alpha / 4.0;
    for (const auto& f : fs) {
      viol_cs = std::max({viol_cs, f.C * f.C - f.X * f.V, f.C_phi * f.C_phi - f.X_phi * f.V_phi});
      scale_cs = std::max({scale_cs, f.X * f.V, f.X_phi * f.V_phi});
      viol_sw = std::max({viol_sw, kb.phi_min * 2.0 * f.X - f.X_phi,
                          f.X_phi - kb.phi_max * 2.0 * f.X, kb.phi_min * f.X - f.M,
                          f.M - kb.phi_max * f.X});
      scale_sw = std::max(scale_sw, kb.phi_max * 2.0 * f.X);
      viol_kp = std::max(viol_kp, floor_k * f.X - f.K);
      scale_kp = std::max({scale_kp, std::abs(f.K), std::abs(floor_k) * f.X});
    }
    const double rel_cs = scale_cs > 0.0 ? viol_cs / scale_cs : (viol_cs > 0.0 ? 1.0 : 0.0);
    add("cauchy_schwarz", verdict(rel_cs <= opt.tol_identity), opt.tol_identity - rel_cs,
        "max relative C^2 - X V excess = " + detail::fmt_sci(rel_cs));
    const double rel_sw = scale_sw > 0.0 ? viol_sw / scale_sw : (viol_sw > 0.0 ? 1.0 : 0.0);
    add("weighted_sandwich", verdict(rel_sw <= opt.tol_identity), opt.tol_identity - rel_sw,
        "max relative sandwich violation = " + detail::fmt_sci(rel_sw));
    if (alpha * alpha < 4.0 * params.lambda_w) {
      const double rel_kp = scale_kp > 0.0 ? viol_kp / scale_kp : (viol_kp > 0.0 ? 1.0 : 0.0);
      add("k_positivity", verdict(rel_kp <= opt.tol_identity), opt.tol_identity - rel_kp,
          "max relative K floor violation = " + detail::fmt_sci(rel_kp));
    } else {
      add("k_positivity", CheckStatus::NotApplicable, 0.0, "alpha^2 >= 4 lambda_w");
    }
  }

  // Time integral of V bounded through the dissipation identity.
  if (params.lambda_v > 0.0 && kb.phi_min > 0.0) {
    const double h = dt;
    double integral = 0.0;
    for (std::size_t j = 0; j + 1 < fs.size(); ++j) {
      integral += 0.5 * (fs[j].V + fs[j + 1].V) * h;
    }
    const double bound = E0 / (2.0 * kb.phi_min * params.lambda_v);
    const double allowed = bound * (1.0 + opt.tol_integral);
    add("velocity_integral_bound", verdict(integral <= allowed),
        (allowed - integral) / std::max(bound, 1e-300),
        "trapezoid integral of V = " + detail::fmt_sci(integral) + ", bound = " +
            detail::fmt_sci(bound));
  } else {
    add("velocity_integral_bound", CheckStatus::NotApplicable, 0.0,
        "needs lambda_v > 0 and phi_min > 0");
  }

  // Strength/kernel smallness condition and the exponential envelopes.
  if (rep.rate) {
    const auto& r = *rep.rate;
    const double margin = r.c12_rhs - r.c12_lhs;
    if (r.condition_holds) {
      add("condition_c12", CheckStatus::Pass, margin, "lhs = " + detail::fmt_sci(r.c12_lhs) +
                                                          ", rhs = " + detail::fmt_sci(r.c12_rhs));
      const double K0 = fs.front().K;
      const double t0 = fs.front().t;
      double k_margin = std::numeric_limits<double>::infinity();
      double x_margin = std::numeric_limits<double>::infinity();
      const double denom = params.lambda_w - r.alpha * r.alpha / 4.0;
      for (const auto& f : fs) {
        const double envelope = K0 * std::exp(-r.beta * (f.t - t0)) * (1.0 + opt.tol_envelope);
        k_margin = std::min(k_margin, (envelope - f.K) / std::max(K0, 1e-300));
        x_margin = std::min(x_margin, (envelope / denom - f.X) / std::max(K0 / denom, 1e-300));
      }
      add("k_envelope", verdict(k_margin >= 0.0), k_margin,
          "min relative envelope headroom, beta = " + detail::fmt_sci(r.beta));
      add("x_envelope", verdict(x_margin >= 0.0), x_margin,
          "min relative envelope headroom, floor factor = " + detail::fmt_sci(denom));

      std::vector<double> ts, ks;
      ts.reserve(fs.size());
      ks.reserve(fs.size());
      for (const auto& f : fs) {
        ts.push_back(f.t);
        ks.push_back(f.K);
      }
      const double span = fs.back().t - t0;
      try {
        rep.fit = fit_decay_rate(ts, ks, t0 + opt.fit_lo_frac * span, t0 + opt.fit_hi_frac * span);
        add("decay_fit", verdict(rep.fit->beta_emp >= r.beta), rep.fit->beta_emp - r.beta,
            "beta_emp = " + detail::fmt_sci(rep.fit->beta_emp) + ", guaranteed beta = " +
                detail::fmt_sci(r.beta) + ", r2 = " + detail::fmt_sci(rep.fit->r2));
      } catch (const std::invalid_argument& e) {
        add("decay_fit", CheckStatus::NotApplicable, 0.0, e.what());
      }
    } else {
      add("condition_c12", CheckStatus::NotApplicable, margin,
          "smallness condition violated (lhs = " + detail::fmt_sci(r.c12_lhs) + ", rhs = " +
              detail::fmt_sci(r.c12_rhs) + "); envelope not claimed");
      add("k_envelope", CheckStatus::NotApplicable, 0.0, "condition violated");
      add("x_envelope", CheckStatus::NotApplicable, 0.0, "condition violated");
      add("decay_fit", CheckStatus::NotApplicable, 0.0, "condition violated");
    }
  } else {
    add("condition_c12", CheckStatus::NotApplicable, 0.0,
        "weighted decay parameters undefined (lambda_x, lambda_v, lambda_w must be positive)");
    add("k_envelope", CheckStatus::NotApplicable, 0.0, "no decay parameters");
    add("x_envelope", CheckStatus::NotApplicable, 0.0, "no decay parameters");
    add("decay_fit", CheckStatus::NotApplicable, 0.0, "no decay parameters");
  }

  // Rate-free herding: X + V eventually falls below the threshold.
  const double base_xv = fs.front().X + fs.front().V;
  if (!opt.run_tail_harness) {
    add("tail_decay", CheckStatus::NotApplicable, 0.0, "harness disabled");
  } else if (params.lambda_w > 0.0 && params.lambda_v > 0.0 && kb.phi_min > 0.0 &&
             base_xv > 0.0) {
    rep.tail = tail_decay(init, params, kernel, dt, t_end, opt.tail_threshold,
                          opt.tail_doublings);
    add("tail_decay", verdict(rep.tail->reached), opt.tail_threshold - rep.tail->final_ratio,
        "(X+V)/(X+V)(0) = " + detail::fmt_sci(rep.tail->final_ratio) + " at t = " +
            detail::fmt_sci(rep.tail->final_t));
  } else if (base_xv == 0.0) {
    add("tail_decay", CheckStatus::NotApplicable, 0.0, "already at consensus");
  } else {
    add("tail_decay", CheckStatus::NotApplicable, 0.0,
        "needs lambda_w > 0, lambda_v > 0 and phi_min > 0");
  }

  return rep;
}

}  // namespace herd
