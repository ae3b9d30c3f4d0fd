#pragma once

// Empirical measures on phase space and the exact 1-Wasserstein distance
// between them (Euclidean ground metric on the full (x, v) vector).
//
// Weights are exact rationals. Both solvers scale the two measures to a
// common denominator so atom masses become integers, which makes the
// transport polytope integral: the min-cost-flow optimum returned by
// w1_exact is the true optimal coupling, with only the cost arithmetic in
// floating point. w1_oracle_small expands everything into unit atoms and
// tries every permutation; it exists to cross-check the flow solver on tiny
// instances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

#include "herd/rational.hpp"
#include "herd/types.hpp"

namespace herd {

struct EmpiricalMeasure {
  Matd atoms;                     // n x 2d rows (x_i, v_i)
  std::vector<Rational> weights;  // n positive entries summing to exactly 1

  Eigen::Index count() const { return atoms.rows(); }
  Eigen::Index phase_dim() const { return atoms.cols(); }
};

inline void validate(const EmpiricalMeasure& m) {
  if (m.atoms.rows() == 0 || m.atoms.cols() == 0) {
    throw std::invalid_argument("EmpiricalMeasure: needs at least one atom");
  }
  if (m.atoms.cols() % 2 != 0) {
    throw std::invalid_argument("EmpiricalMeasure: phase dimension must be even (x and v blocks)");
  }
  if (!m.atoms.allFinite()) throw std::invalid_argument("EmpiricalMeasure: nonfinite atom");
  if (static_cast<Eigen::Index>(m.weights.size()) != m.atoms.rows()) {
    throw std::invalid_argument("EmpiricalMeasure: weight count does not match atom count");
  }
  Rational sum(0);
  for (const auto& w : m.weights) {
    if (w.num <= 0) throw std::invalid_argument("EmpiricalMeasure: weights must be positive");
    sum = sum + w;
  }
  if (!(sum == Rational(1))) {
    throw std::invalid_argument("EmpiricalMeasure: weights must sum to exactly 1, got " +
                                to_string(sum));
  }
}

inline EmpiricalMeasure from_state(const ParticleStated& s) {
  validate(s);
  const Eigen::Index n = s.size(), d = s.dim();
  EmpiricalMeasure m;
  m.atoms.resize(n, 2 * d);
  m.atoms.leftCols(d) = s.positions;
  m.atoms.rightCols(d) = s.velocities;
  m.weights.assign(static_cast<std::size_t>(n), Rational(1, n));
  return m;
}

struct MeasureMoments {
  Rational mass;         // exact sum of weights
  Vecd mean_v;           // weighted mean of the velocity block
  double second_moment;  // weighted mean of |x|^2 + |v|^2
};

inline MeasureMoments moments(const EmpiricalMeasure& m) {
  validate(m);
  const Eigen::Index d = m.phase_dim() / 2;
  MeasureMoments out;
  out.mass = Rational(0);
  out.mean_v = Vecd::Zero(d);
  out.second_moment = 0.0;
  for (Eigen::Index i = 0; i < m.count(); ++i) {
    const auto& w = m.weights[static_cast<std::size_t>(i)];
    out.mass = out.mass + w;
    const double wd = w.to_double();
    out.mean_v += wd * m.atoms.row(i).tail(d).transpose();
    out.second_moment += wd * m.atoms.row(i).squaredNorm();
  }
  return out;
}

namespace detail {

// Largest denominator the integer scaling may reach; beyond this the scaled
// supplies stop being trustworthy test quantities.
constexpr long long kMaxCommonDenominator = 1'000'000;

inline long long common_denominator(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  long long lcd = 1;
  auto fold = [&lcd](const std::vector<Rational>& ws) {
    for (const auto& w : ws) {
      lcd = std::lcm(lcd, w.den);
      if (lcd > kMaxCommonDenominator) {
        throw std::invalid_argument(
            "w1: weight denominators need a common multiple above 1e6; too fine for exact scaling");
      }
    }
  };
  fold(a.weights);
  fold(b.weights);
  return lcd;
}

inline std::vector<long long> scaled_supplies(const EmpiricalMeasure& m, long long lcd) {
  std::vector<long long> s;
  s.reserve(m.weights.size());
  for (const auto& w : m.weights) s.push_back(w.num * (lcd / w.den));
  return s;
}

}  // namespace detail

// Exact W1 by successive shortest augmenting paths with Johnson potentials
// on the complete bipartite supply/demand graph. Runs in roughly
// O(augmentations * n * m); augmentations stay near n + m because every
// augmentation exhausts a supply, a demand, or a backward arc.
inline double w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  validate(mu);
  validate(nu);
  if (mu.phase_dim() != nu.phase_dim()) {
    throw std::invalid_argument("w1_exact: phase dimensions differ");
  }
  const Eigen::Index n = mu.count(), m = nu.count();
  if (n * m > 4'000'000) {
    throw std::invalid_argument("w1_exact: instance too large (atom count product above 4e6)");
  }

  const long long lcd = detail::common_denominator(mu, nu);
  std::vector<long long> rem_s = detail::scaled_supplies(mu, lcd);
  std::vector<long long> rem_t = detail::scaled_supplies(nu, lcd);

  Matd cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      cost(i, j) = (mu.atoms.row(i) - nu.atoms.row(j)).norm();
    }
  }

  // flow(i, j) in scaled units; potentials keep reduced costs nonnegative.
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> flow =
      Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, m);
  std::vector<double> pot(static_cast<std::size_t>(n + m), 0.0);
  long long pushed = 0;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(n + m));
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n + m));

  while (pushed < lcd) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), Eigen::Index(-1));
    using Item = std::pair<double, Eigen::Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rem_s[static_cast<std::size_t>(i)] > 0) {
        dist[static_cast<std::size_t>(i)] = 0.0;
        heap.push({0.0, i});
      }
    }
    Eigen::Index best_target = -1;
    double best_dist = inf;
    while (!heap.empty()) {
      const auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[static_cast<std::size_t>(u)]) continue;
      if (du >= best_dist) break;  // all remaining labels are at least as far
      if (u < n) {
        // Forward arcs u -> every demand node.
        for (Eigen::Index j = 0; j < m; ++j) {
          const double rc =
              std::max(0.0, cost(u, j) + pot[static_cast<std::size_t>(u)] -
                                pot[static_cast<std::size_t>(n + j)]);
          const double nd = du + rc;
          if (nd < dist[static_cast<std::size_t>(n + j)]) {
            dist[static_cast<std::size_t>(n + j)] = nd;
            parent[static_cast<std::size_t>(n + j)] = u;
            heap.push({nd, n + j});
            if (rem_t[static_cast<std::size_t>(j)] > 0 && nd < best_dist) {
              best_dist = nd;
              best_target = j;
            }
          }
        }
      } else {
        // Backward arcs along positive flow.
        const Eigen::Index j = u - n;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (flow(i, j) <= 0) continue;
          const double rc =
              std::max(0.0, -cost(i, j) + pot[static_cast<std::size_t>(n + j)] -
                                pot[static_cast<std::size_t>(i)]);
          const double nd = du + rc;
          if (nd < dist[static_cast<std::size_t>(i)]) {
            dist[static_cast<std::size_t>(i)] = nd;
            parent[static_cast<std::size_t>(i)] = u;
            heap.push({nd, i});
          }
        }
      }
    }
    if (best_target < 0) {
      throw std::logic_error("w1_exact: no augmenting path although supply remains");
    }

    for (std::size_t q = 0; q < dist.size(); ++q) {
      pot[q] += std::min(dist[q], best_dist);
    }

    // Walk back from the chosen demand node, find the bottleneck, augment.
    long long bottleneck = rem_t[static_cast<std::size_t>(best_target)];
    Eigen::Index node = n + best_target;
    while (true) {
      const Eigen::Index par = parent[static_cast<std::size_t>(node)];
      if (node >= n) {
        if (par < 0) break;  // unreachable; demand nodes always have parents here
      } else {
        if (par < 0) {
          bottleneck = std::min(bottleneck, rem_s[static_cast<std::size_t>(node)]);
          break;
        }
        bottleneck = std::min(bottleneck, flow(node, par - n));
      }
      node = par;
    }
    node = n + best_target;
    while (true) {
      const Eigen::Index par = parent[static_cast<std::size_t>(node)];
      if (node >= n) {
        flow(par, node - n) += bottleneck;
      } else {
        if (par < 0) {
          rem_s[static_cast<std::size_t>(node)] -= bottleneck;
          break;
        }
        flow(node, par - n) -= bottleneck;
      }
      node = par;
    }
    rem_t[static_cast<std::size_t>(best_target)] -= bottleneck;
    pushed += bottleneck;
  }

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (flow(i, j) > 0) total += double(flow(i, j)) * cost(i, j);
    }
  }
  return total / double(lcd);
}

// Brute force over all assignments of unit atoms; both measures must scale
// to at most 8 unit atoms under their common denominator.
inline double w1_oracle_small(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  validate(mu);
  validate(nu);
  if (mu.phase_dim() != nu.phase_dim()) {
    throw std::invalid_argument("w1_oracle_small: phase dimensions differ");
  }
  const long long lcd = detail::common_denominator(mu, nu);
  if (lcd > 8) {
    throw std::invalid_argument("w1_oracle_small: scaled atom count above 8, use w1_exact");
  }
  auto expand = [lcd](const EmpiricalMeasure& m) {
    std::vector<Eigen::Index> units;
    const auto supply = detail::scaled_supplies(m, lcd);
    for (Eigen::Index i = 0; i < m.count(); ++i) {
      for (long long r = 0; r < supply[static_cast<std::size_t>(i)]; ++r) units.push_back(i);
    }
    return units;
  };
  const auto left = expand(mu);
  const auto right = expand(nu);

  std::vector<int> perm(right.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < left.size(); ++i) {
      cost += (mu.atoms.row(left[i]) - nu.atoms.row(right[static_cast<std::size_t>(perm[i])])).norm();
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / double(lcd);
}

}  // namespace herd
