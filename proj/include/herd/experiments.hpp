#pragma once

// Seeded initial-condition samplers and the numerical experiments built on
// top of the integrator: mean-field convergence against the largest
// population, stability of the flow in W1, empirical decay-rate fits, the
// doubling-horizon tail harness, and the all-in-one verification suite.
//
// Sampling uses one independent substream per agent index (mt19937_64
// seeded from a splitmix64 mix of the run seed and the index), so the first
// n agents of a size-N draw equal the size-n draw bit for bit. That prefix
// coupling is what makes the mean-field runs common-random-number
// comparable across sizes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "herd/dynamics.hpp"
#include "herd/functionals.hpp"
#include "herd/kernel.hpp"
#include "herd/parallel.hpp"
#include "herd/transport.hpp"
#include "herd/types.hpp"

namespace herd {

struct UniformBoxSpec {
  Matd position_box;  // d x 2 rows of (lo, hi)
  Matd velocity_box;  // d x 2
};

struct GaussianSpec {
  Vecd mean_x, sd_x;  // diagonal deviations; draws are rejected outside 6 sd
  Vecd mean_v, sd_v;
};

struct TwoClusterSpec {
  Vecd offset_x;  // cluster centers sit at +/- offset
  Vecd offset_v;
  double spread = 0.0;  // uniform cube half-width around each center
};

using DistributionSpec = std::variant<UniformBoxSpec, GaussianSpec, TwoClusterSpec>;

struct InitialSampler {
  DistributionSpec spec;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; deterministic for a given engine
// state on every platform.
inline double uniform01(std::mt19937_64& eng) {
  return double(eng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& eng, double lo, double hi) {
  return lo + uniform01(eng) * (hi - lo);
}

// Standard normal conditioned on |z| <= 6 (Box-Muller, first coordinate,
// resampled on the vanishingly rare excursion).
inline double truncated_normal(std::mt19937_64& eng) {
  while (true) {
    const double u1 = uniform01(eng);
    const double u2 = uniform01(eng);
    if (u1 <= 0.0) continue;
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    if (std::abs(z) <= 6.0) return z;
  }
}

inline Eigen::Index spec_dim(const DistributionSpec& spec) {
  if (const auto* u = std::get_if<UniformBoxSpec>(&spec)) return u->position_box.rows();
  if (const auto* g = std::get_if<GaussianSpec>(&spec)) return g->mean_x.size();
  return std::get<TwoClusterSpec>(spec).offset_x.size();
}

inline void validate_spec(const DistributionSpec& spec) {
  if (const auto* u = std::get_if<UniformBoxSpec>(&spec)) {
    if (u->position_box.rows() < 1 || u->position_box.cols() != 2 ||
        u->velocity_box.rows() != u->position_box.rows() || u->velocity_box.cols() != 2) {
      throw std::invalid_argument("UniformBox: boxes must be d x 2 with matching d");
    }
    for (Eigen::Index k = 0; k < u->position_box.rows(); ++k) {
      if (!(u->position_box(k, 0) <= u->position_box(k, 1)) ||
          !(u->velocity_box(k, 0) <= u->velocity_box(k, 1))) {
        throw std::invalid_argument("UniformBox: box lo must not exceed hi");
      }
    }
    if (!u->position_box.allFinite() || !u->velocity_box.allFinite()) {
      throw std::invalid_argument("UniformBox: nonfinite box");
    }
  } else if (const auto* g = std::get_if<GaussianSpec>(&spec)) {
    const Eigen::Index d = g->mean_x.size();
    if (d < 1 || g->sd_x.size() != d || g->mean_v.size() != d || g->sd_v.size() != d) {
      throw std::invalid_argument("Gaussian: mean/sd vectors must share one dimension");
    }
    if ((g->sd_x.array() < 0).any() || (g->sd_v.array() < 0).any()) {
      throw std::invalid_argument("Gaussian: deviations must be nonnegative");
    }
  } else {
    const auto& t = std::get<TwoClusterSpec>(spec);
    if (t.offset_x.size() < 1 || t.offset_v.size() != t.offset_x.size()) {
      throw std::invalid_argument("TwoCluster: offsets must share one dimension");
    }
    if (!(t.spread >= 0.0)) throw std::invalid_argument("TwoCluster: spread must be nonnegative");
  }
}

}  // namespace detail

inline ParticleStated sample(const InitialSampler& sampler, Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("sample: need at least one agent");
  detail::validate_spec(sampler.spec);
  const Eigen::Index d = detail::spec_dim(sampler.spec);
  ParticleStated s;
  s.t = 0.0;
  s.positions.resize(n, d);
  s.velocities.resize(n, d);
  const std::uint64_t base = detail::splitmix64(sampler.seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::mt19937_64 eng(detail::splitmix64(base + std::uint64_t(i)));
    if (const auto* u = std::get_if<UniformBoxSpec>(&sampler.spec)) {
      for (Eigen::Index k = 0; k < d; ++k) {
        s.positions(i, k) = detail::uniform_in(eng, u->position_box(k, 0), u->position_box(k, 1));
      }
      for (Eigen::Index k = 0; k < d; ++k) {
        s.velocities(i, k) = detail::uniform_in(eng, u->velocity_box(k, 0), u->velocity_box(k, 1));
      }
    } else if (const auto* g = std::get_if<GaussianSpec>(&sampler.spec)) {
      for (Eigen::Index k = 0; k < d; ++k) {
        s.positions(i, k) = g->mean_x(k) + g->sd_x(k) * detail::truncated_normal(eng);
      }
      for (Eigen::Index k = 0; k < d; ++k) {
        s.velocities(i, k) = g->mean_v(k) + g->sd_v(k) * detail::truncated_normal(eng);
      }
    } else {
      const auto& t = std::get<TwoClusterSpec>(sampler.spec);
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;  // parity split keeps prefixes balanced
      for (Eigen::Index k = 0; k < d; ++k) {
        s.positions(i, k) = sign * t.offset_x(k) + detail::uniform_in(eng, -t.spread, t.spread);
      }
      for (Eigen::Index k = 0; k < d; ++k) {
        s.velocities(i, k) = sign * t.offset_v(k) + detail::uniform_in(eng, -t.spread, t.spread);
      }
    }
  }
  return s;
}

namespace detail {

// Integrates and snapshots at the given step indices (ascending, 0 allowed).
inline std::vector<ParticleStated> states_at_steps(const ParticleStated& init,
                                                   const ModelParamsd& p, const KernelSpecd& k,
                                                   double dt,
                                                   const std::vector<long long>& steps) {
  std::vector<ParticleStated> out;
  out.reserve(steps.size());
  ParticleStated cur = init;
  long long step = 0;
  for (const long long target : steps) {
    while (step < target) {
      cur = step_rk4(cur, p, k, dt);
      ++step;
      cur.t = init.t + double(step) * dt;
    }
    out.push_back(cur);
  }
  return out;
}

inline std::vector<long long> checkpoint_steps(const std::vector<double>& times, double dt) {
  std::vector<long long> steps;
  steps.reserve(times.size());
  long long prev = -1;
  for (const double t : times) {
    const long long s = std::llround(t / dt);
    if (s < 0 || std::abs(double(s) * dt - t) > 1e-9 * dt) {
      throw std::invalid_argument("checkpoints must be nonnegative multiples of dt");
    }
    if (s <= prev) throw std::invalid_argument("checkpoints must be strictly increasing");
    steps.push_back(s);
    prev = s;
  }
  if (steps.empty()) throw std::invalid_argument("need at least one checkpoint");
  return steps;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

struct MeanfieldRow {
  std::uint64_t seed;
  Eigen::Index n;
  double t;
  double w1;  // against the largest size, same seed, same time
};

struct MeanfieldMedian {
  Eigen::Index n;
  double t;
  double w1_median;
};

struct MeanfieldResult {
  std::vector<MeanfieldRow> rows;           // seed-major, then size, then time
  std::vector<MeanfieldMedian> medians;     // size-major, then time
  bool medians_strictly_decreasing = false; // in n, for every checkpoint
};

// Common-random-number convergence study: every size draws its agents from
// the same per-seed stream (prefix coupling), runs the same horizon, and is
// compared in W1 against the largest size at each checkpoint.
inline MeanfieldResult meanfield_convergence(const DistributionSpec& dist,
                                             const std::vector<Eigen::Index>& sizes,
                                             const std::vector<std::uint64_t>& seeds,
                                             const ModelParamsd& params, const KernelSpecd& kernel,
                                             double dt, const std::vector<double>& checkpoints,
                                             int threads = 1) {
  if (sizes.size() < 2) throw std::invalid_argument("meanfield_convergence: need at least two sizes");
  if (!std::is_sorted(sizes.begin(), sizes.end()) ||
      std::adjacent_find(sizes.begin(), sizes.end()) != sizes.end()) {
    throw std::invalid_argument("meanfield_convergence: sizes must be strictly increasing");
  }
  if (seeds.empty()) throw std::invalid_argument("meanfield_convergence: need at least one seed");
  validate(params);
  require_admissible(kernel);
  const auto steps = detail::checkpoint_steps(checkpoints, dt);

  const std::size_t n_sizes = sizes.size();
  const std::size_t n_runs = seeds.size() * n_sizes;
  // measures[run][checkpoint], run = seed_index * n_sizes + size_index
  std::vector<std::vector<EmpiricalMeasure>> measures(n_runs);
  parallel_for_index(n_runs, threads, [&](std::size_t run) {
    const std::uint64_t seed = seeds[run / n_sizes];
    const Eigen::Index n = sizes[run % n_sizes];
    const ParticleStated init = sample(InitialSampler{dist, seed}, n);
    const auto snaps = detail::states_at_steps(init, params, kernel, dt, steps);
    auto& out = measures[run];
    out.reserve(snaps.size());
    for (const auto& s : snaps) out.push_back(from_state(s));
  });

  MeanfieldResult res;
  const std::size_t n_small = n_sizes - 1;
  res.rows.resize(seeds.size() * n_small * steps.size());
  parallel_for_index(res.rows.size(), threads, [&](std::size_t slot) {
    const std::size_t per_seed = n_small * steps.size();
    const std::size_t si = slot / per_seed;
    const std::size_t rest = slot % per_seed;
    const std::size_t zi = rest / steps.size();
    const std::size_t ci = rest % steps.size();
    const auto& small = measures[si * n_sizes + zi][ci];
    const auto& big = measures[si * n_sizes + (n_sizes - 1)][ci];
    res.rows[slot] = {seeds[si], sizes[zi], double(steps[ci]) * dt, w1_exact(small, big)};
  });

  res.medians_strictly_decreasing = true;
  for (std::size_t zi = 0; zi + 1 < n_sizes; ++zi) {
    for (std::size_t ci = 0; ci < steps.size(); ++ci) {
      std::vector<double> vals;
      vals.reserve(seeds.size());
      for (std::size_t si = 0; si < seeds.size(); ++si) {
        vals.push_back(res.rows[si * n_small * steps.size() + zi * steps.size() + ci].w1);
      }
      res.medians.push_back({sizes[zi], double(steps[ci]) * dt, detail::median(vals)});
    }
  }
  for (std::size_t ci = 0; ci < steps.size(); ++ci) {
    for (std::size_t zi = 0; zi + 1 < n_sizes - 1; ++zi) {
      const double a = res.medians[zi * steps.size() + ci].w1_median;
      const double b = res.medians[(zi + 1) * steps.size() + ci].w1_median;
      if (!(b < a)) res.medians_strictly_decreasing = false;
    }
  }
  return res;
}

struct StabilityPoint {
  double t;
  double w1;
  double ratio;  // w1 / w1 at t = 0
};

struct StabilityResult {
  double w1_initial = 0.0;
  std::vector<StabilityPoint> points;
  double sup_ratio = 0.0;
};

// Tracks W1 between two coupled runs relative to their initial separation.
inline StabilityResult stability_ratio(const ParticleStated& init_a, const ParticleStated& init_b,
                                       const ModelParamsd& params, const KernelSpecd& kernel,
                                       double dt, const std::vector<double>& checkpoints) {
  validate(init_a);
  validate(init_b);
  const auto steps = detail::checkpoint_steps(checkpoints, dt);
  StabilityResult res;
  res.w1_initial = w1_exact(from_state(init_a), from_state(init_b));
  if (!(res.w1_initial > 0.0)) {
    throw std::invalid_argument("stability_ratio: initial states coincide, ratio undefined");
  }
  const auto sa = detail::states_at_steps(init_a, params, kernel, dt, steps);
  const auto sb = detail::states_at_steps(init_b, params, kernel, dt, steps);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double w = w1_exact(from_state(sa[i]), from_state(sb[i]));
    res.points.push_back({double(steps[i]) * dt, w, w / res.w1_initial});
    res.sup_ratio = std::max(res.sup_ratio, w / res.w1_initial);
  }
  return res;
}

struct DecayFit {
  double beta_emp = 0.0;  // negative slope of ln(value) over the window
  double r2 = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  std::size_t points = 0;
};

// Least squares on (t, ln value) over [t_lo, t_hi]. Values at or below
// 1e-14 of the window maximum are dropped as noise floor.
inline DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values,
                               double t_lo, double t_hi) {
  if (times.size() != values.size()) {
    throw std::invalid_argument("fit_decay_rate: times and values differ in length");
  }
  double vmax = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= t_lo && times[i] <= t_hi) vmax = std::max(vmax, values[i]);
  }
  std::vector<double> ts, ls;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    if (!(values[i] > 0.0) || values[i] <= 1e-14 * vmax) continue;
    ts.push_back(times[i]);
    ls.push_back(std::log(values[i]));
  }
  if (ts.size() < 5) {
    throw std::invalid_argument("fit_decay_rate: fewer than five usable points in the window");
  }
  const double n = double(ts.size());
  double st = 0, sl = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += ls[i];
  }
  const double mt = st / n, ml = sl / n;
  double stt = 0, stl = 0, sll = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    stl += (ts[i] - mt) * (ls[i] - ml);
    sll += (ls[i] - ml) * (ls[i] - ml);
  }
  if (!(stt > 0.0)) throw std::invalid_argument("fit_decay_rate: degenerate time window");
  const double slope = stl / stt;
  DecayFit fit;
  fit.beta_emp = -slope;
  const double ss_res = sll - slope * stl;
  fit.r2 = sll > 0.0 ? std::max(0.0, 1.0 - ss_res / sll) : 1.0;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.points = ts.size();
  return fit;
}

struct TailCheckpoint {
  double t;
  double ratio;  // (X + V)(t) / (X + V)(0)
};

struct TailDecayResult {
  std::vector<TailCheckpoint> checkpoints;  // at T, 2T, 4T, ...
  double final_t = 0.0;
  double final_ratio = 0.0;
  int doublings_used = 0;
  bool reached = false;
};

// Doubling-horizon harness: integrate to T, check the centered tail ratio,
// and keep doubling the horizon (continuing the same run) until the ratio
// falls below the threshold or the doubling budget runs out.
inline TailDecayResult tail_decay(const ParticleStated& init, const ModelParamsd& params,
                                  const KernelSpecd& kernel, double dt, double t0_horizon,
                                  double threshold, int max_doublings) {
  validate(init);
  validate(params);
  require_admissible(kernel);
  if (!(threshold > 0.0)) throw std::invalid_argument("tail_decay: threshold must be positive");
  if (max_doublings < 0) throw std::invalid_argument("tail_decay: negative doubling budget");
  const auto e0 = deviation_energies(init);
  const double base = e0.X + e0.V;
  if (!(base > 0.0)) {
    throw std::invalid_argument("tail_decay: initial state is already at consensus");
  }
  TailDecayResult res;
  ParticleStated cur = init;
  long long step = 0;
  double horizon = t0_horizon;
  for (int k = 0; k <= max_doublings; ++k) {
    const long long target = std::llround(horizon / dt);
    if (target <= step) throw std::invalid_argument("tail_decay: horizon must exceed dt");
    while (step < target) {
      cur = step_rk4(cur, params, kernel, dt);
      ++step;
      cur.t = init.t + double(step) * dt;
    }
    const auto e = deviation_energies(cur);
    const double ratio = (e.X + e.V) / base;
    res.checkpoints.push_back({cur.t, ratio});
    res.final_t = cur.t;
    res.final_ratio = ratio;
    res.doublings_used = k;
    if (ratio <= threshold) {
      res.reached = true;
      break;
    }
    horizon *= 2.0;
  }
  return res;
}

}  // namespace herd
