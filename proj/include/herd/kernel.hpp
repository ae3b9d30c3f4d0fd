#pragma once

// Communication kernels phi(r) and their radial potential
// Phi(r) = integral_0^r u * phi(u) du.
//
// Admissible kernels are nonnegative and nonincreasing on r >= 0; evenness
// is structural because callers always evaluate at a distance. Three
// families are supported: a constant kernel, the algebraic decay family
// phi(r) = (1 + r^2)^(-gamma), and a tabulated kernel defined by knots with
// linear interpolation inside the grid and constant extrapolation outside.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "herd/types.hpp"

namespace herd {

enum class KernelFamily { Constant, CuckerSmale, Tabulated };

template <class Scalar>
struct KernelSpec {
  KernelFamily family = KernelFamily::Constant;
  Scalar c = Scalar(1);      // Constant: kernel value
  Scalar gamma = Scalar(1);  // CuckerSmale: decay exponent
  Mat<Scalar> knots;         // Tabulated: K x 2 rows of (r_k, phi_k), r strictly increasing

  static KernelSpec constant(Scalar value) {
    KernelSpec k;
    k.family = KernelFamily::Constant;
    k.c = value;
    return k;
  }

  static KernelSpec cucker_smale(Scalar gamma) {
    KernelSpec k;
    k.family = KernelFamily::CuckerSmale;
    k.gamma = gamma;
    return k;
  }

  static KernelSpec tabulated(Mat<Scalar> knots) {
    KernelSpec k;
    k.family = KernelFamily::Tabulated;
    k.knots = std::move(knots);
    return k;
  }
};

using KernelSpecd = KernelSpec<double>;

template <class Scalar>
struct KernelBounds {
  Scalar phi_min = Scalar(0);  // inf of phi over [0, r_max]
  Scalar phi_max = Scalar(0);  // sup of phi over [0, r_max]
};

// Returns a list of admissibility violations; empty means the kernel is
// usable everywhere in the toolkit. Messages name the offending parameter
// or knot interval.
template <class Scalar>
std::vector<std::string> validate_kernel(const KernelSpec<Scalar>& k) {
  std::vector<std::string> issues;
  auto bad = [&](const std::string& msg) { issues.push_back(msg); };

  switch (k.family) {
    case KernelFamily::Constant:
      if (!std::isfinite(double(k.c))) bad("Constant: value is not finite");
      else if (k.c < Scalar(0)) bad("Constant: value is negative, kernel must be nonnegative");
      break;
    case KernelFamily::CuckerSmale:
      if (!std::isfinite(double(k.gamma))) bad("CuckerSmale: gamma is not finite");
      else if (k.gamma < Scalar(0)) bad("CuckerSmale: gamma is negative, kernel would be increasing");
      break;
    case KernelFamily::Tabulated: {
      const auto K = k.knots.rows();
      if (K < 1 || k.knots.cols() != 2) {
        bad("Tabulated: knots must be a Kx2 array with K >= 1");
        break;
      }
      for (Eigen::Index i = 0; i < K; ++i) {
        if (!std::isfinite(double(k.knots(i, 0))) || !std::isfinite(double(k.knots(i, 1)))) {
          bad("Tabulated: knot " + std::to_string(i) + " has a nonfinite entry");
          return issues;
        }
      }
      if (k.knots(0, 0) < Scalar(0)) bad("Tabulated: knot radii must be nonnegative");
      for (Eigen::Index i = 0; i + 1 < K; ++i) {
        if (!(k.knots(i, 0) < k.knots(i + 1, 0))) {
          bad("Tabulated: knot radii must be strictly increasing at interval " +
              std::to_string(i) + " -> " + std::to_string(i + 1));
        }
        if (k.knots(i + 1, 1) > k.knots(i, 1)) {
          bad("Tabulated: phi increases on interval " + std::to_string(i) + " -> " +
              std::to_string(i + 1) + " (" + std::to_string(double(k.knots(i, 1))) + " -> " +
              std::to_string(double(k.knots(i + 1, 1))) + "), kernel must be nonincreasing");
        }
      }
      for (Eigen::Index i = 0; i < K; ++i) {
        if (k.knots(i, 1) < Scalar(0)) {
          bad("Tabulated: phi is negative at knot " + std::to_string(i));
        }
      }
      break;
    }
  }
  return issues;
}

template <class Scalar>
void require_admissible(const KernelSpec<Scalar>& k) {
  const auto issues = validate_kernel(k);
  if (!issues.empty()) {
    throw std::invalid_argument("kernel is not admissible: " + issues.front());
  }
}

namespace detail {

template <class Scalar>
Scalar tabulated_phi(const Mat<Scalar>& knots, Scalar r) {
  const auto K = knots.rows();
  if (r <= knots(0, 0)) return knots(0, 1);
  if (r >= knots(K - 1, 0)) return knots(K - 1, 1);
  // Find the segment with knots(i,0) <= r < knots(i+1,0).
  Eigen::Index lo = 0, hi = K - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    if (knots(mid, 0) <= r) lo = mid; else hi = mid;
  }
  const Scalar r0 = knots(lo, 0), r1 = knots(lo + 1, 0);
  const Scalar p0 = knots(lo, 1), p1 = knots(lo + 1, 1);
  const Scalar w = (r - r0) / (r1 - r0);
  return p0 + w * (p1 - p0);
}

}  // namespace detail

// phi at distance r >= 0.
template <class Scalar>
Scalar eval_phi(const KernelSpec<Scalar>& k, Scalar r) {
  if (!(r >= Scalar(0)) || !std::isfinite(double(r))) {
    throw std::domain_error("eval_phi: r must be finite and nonnegative");
  }
  switch (k.family) {
    case KernelFamily::Constant:
      return k.c;
    case KernelFamily::CuckerSmale: {
      using std::pow;
      const Scalar base = Scalar(1) + r * r;
      if (k.gamma == Scalar(1)) return Scalar(1) / base;
      if (k.gamma == Scalar(2)) return Scalar(1) / (base * base);
      return pow(base, -k.gamma);
    }
    case KernelFamily::Tabulated:
      return detail::tabulated_phi(k.knots, r);
  }
  throw std::logic_error("eval_phi: unknown kernel family");
}

// phi from the squared distance. The algebraic family depends on r only
// through r^2, so the force loops can skip the square root.
template <class Scalar>
Scalar eval_phi_sq(const KernelSpec<Scalar>& k, Scalar r2) {
  switch (k.family) {
    case KernelFamily::Constant:
      return k.c;
    case KernelFamily::CuckerSmale: {
      using std::pow;
      const Scalar base = Scalar(1) + r2;
      if (k.gamma == Scalar(1)) return Scalar(1) / base;
      if (k.gamma == Scalar(2)) return Scalar(1) / (base * base);
      return pow(base, -k.gamma);
    }
    case KernelFamily::Tabulated: {
      using std::sqrt;
      return detail::tabulated_phi(k.knots, sqrt(r2));
    }
  }
  throw std::logic_error("eval_phi_sq: unknown kernel family");
}

namespace detail {

// Adaptive Simpson on [a, b] for f, refining until the classic error
// estimate meets the absolute tolerance (with a depth guard).
template <class Scalar, class F>
Scalar adaptive_simpson(const F& f, Scalar a, Scalar b, Scalar fa, Scalar fm, Scalar fb,
                        Scalar whole, Scalar tol, int depth) {
  const Scalar m = (a + b) / Scalar(2);
  const Scalar lm = (a + m) / Scalar(2), rm = (m + b) / Scalar(2);
  const Scalar flm = f(lm), frm = f(rm);
  const Scalar left = (m - a) / Scalar(6) * (fa + Scalar(4) * flm + fm);
  const Scalar right = (b - m) / Scalar(6) * (fm + Scalar(4) * frm + fb);
  const Scalar delta = left + right - whole;
  using std::abs;
  if (depth <= 0 || abs(delta) <= Scalar(15) * tol) {
    return left + right + delta / Scalar(15);
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / Scalar(2), depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / Scalar(2), depth - 1);
}

template <class Scalar, class F>
Scalar integrate(const F& f, Scalar a, Scalar b, Scalar tol) {
  if (!(b > a)) return Scalar(0);
  const Scalar m = (a + b) / Scalar(2);
  const Scalar fa = f(a), fm = f(m), fb = f(b);
  const Scalar whole = (b - a) / Scalar(6) * (fa + Scalar(4) * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

// Radial potential Phi(r) = integral_0^r u * phi(u) du. Closed forms for the
// parametric families; the tabulated family is integrated by adaptive
// quadrature to absolute tolerance 1e-12, split at knot radii so each piece
// is smooth.
template <class Scalar>
Scalar eval_potential(const KernelSpec<Scalar>& k, Scalar r) {
  if (!(r >= Scalar(0)) || !std::isfinite(double(r))) {
    throw std::domain_error("eval_potential: r must be finite and nonnegative");
  }
  using std::expm1;
  using std::log1p;
  switch (k.family) {
    case KernelFamily::Constant:
      return k.c * r * r / Scalar(2);
    case KernelFamily::CuckerSmale: {
      if (k.gamma == Scalar(1)) return log1p(r * r) / Scalar(2);
      // ((1 + r^2)^(1-gamma) - 1) / (2 (1-gamma)), written via expm1 so small
      // radii keep full precision.
      const Scalar one_minus_gamma = Scalar(1) - k.gamma;
      return expm1(one_minus_gamma * log1p(r * r)) / (Scalar(2) * one_minus_gamma);
    }
    case KernelFamily::Tabulated: {
      const Scalar tol = Scalar(1e-12);
      auto f = [&k](Scalar u) { return u * detail::tabulated_phi(k.knots, u); };
      Scalar total = Scalar(0);
      Scalar lo = Scalar(0);
      for (Eigen::Index i = 0; i < k.knots.rows() && lo < r; ++i) {
        const Scalar knot_r = k.knots(i, 0);
        if (knot_r <= lo) continue;
        const Scalar hi = std::min(knot_r, r);
        total += detail::integrate(f, lo, hi, tol / Scalar(4));
        lo = hi;
      }
      if (lo < r) total += detail::integrate(f, lo, r, tol / Scalar(4));
      return total;
    }
  }
  throw std::logic_error("eval_potential: unknown kernel family");
}

// Tight bounds of phi over [0, r_max]. Admissible kernels are nonincreasing,
// so the endpoints decide; the tabulated family additionally scans its knots
// inside the window, which keeps the bounds correct even for a kernel whose
// validation was skipped.
template <class Scalar>
KernelBounds<Scalar> kernel_bounds(const KernelSpec<Scalar>& k, Scalar r_max) {
  if (!(r_max > Scalar(0)) || !std::isfinite(double(r_max))) {
    throw std::domain_error("kernel_bounds: r_max must be finite and positive");
  }
  KernelBounds<Scalar> b;
  const Scalar at0 = eval_phi(k, Scalar(0));
  const Scalar atR = eval_phi(k, r_max);
  b.phi_min = std::min(at0, atR);
  b.phi_max = std::max(at0, atR);
  if (k.family == KernelFamily::Tabulated) {
    for (Eigen::Index i = 0; i < k.knots.rows(); ++i) {
      const Scalar rk = k.knots(i, 0);
      if (rk <= Scalar(0) || rk >= r_max) continue;
      const Scalar v = k.knots(i, 1);
      b.phi_min = std::min(b.phi_min, v);
      b.phi_max = std::max(b.phi_max, v);
    }
  }
  return b;
}

}  // namespace herd
