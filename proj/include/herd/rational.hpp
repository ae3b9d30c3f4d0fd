#pragma once

// Minimal exact rational (int64 numerator/denominator) used for empirical
// measure weights, where "the weights sum to one" has to hold exactly, not
// within roundoff. Arithmetic goes through 128-bit intermediates and throws
// on overflow instead of wrapping.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace herd {

struct Rational {
  long long num = 0;
  long long den = 1;  // always > 0, gcd(num, den) == 1

  Rational() = default;
  Rational(long long n, long long d) : num(n), den(d) { normalize(); }
  explicit Rational(long long n) : num(n), den(1) {}

  void normalize() {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double to_double() const { return double(num) / double(den); }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return (__int128)a.num * b.den < (__int128)b.num * a.den;
  }
};

namespace detail {

inline long long checked_ll(__int128 v, const char* where) {
  if (v > INT64_MAX || v < INT64_MIN) {
    throw std::overflow_error(std::string("Rational overflow in ") + where);
  }
  return (long long)v;
}

}  // namespace detail

inline Rational operator+(const Rational& a, const Rational& b) {
  const long long g = std::gcd(a.den, b.den);
  const long long bd = b.den / g;
  const __int128 num = (__int128)a.num * bd + (__int128)b.num * (a.den / g);
  const __int128 den = (__int128)a.den * bd;
  Rational r;
  r.num = detail::checked_ll(num, "add");
  r.den = detail::checked_ll(den, "add");
  r.normalize();
  return r;
}

inline Rational operator*(const Rational& a, const Rational& b) {
  const long long g1 = std::gcd(a.num < 0 ? -a.num : a.num, b.den);
  const long long g2 = std::gcd(b.num < 0 ? -b.num : b.num, a.den);
  const __int128 num = (__int128)(a.num / g1) * (b.num / g2);
  const __int128 den = (__int128)(a.den / g2) * (b.den / g1);
  Rational r;
  r.num = detail::checked_ll(num, "mul");
  r.den = detail::checked_ll(den, "mul");
  r.normalize();
  return r;
}

inline std::string to_string(const Rational& r) {
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

// Accepts "3/4", integers ("2"), and plain decimals ("0.25", "-1.5e-2" is
// not supported; weights files use rationals or short decimals).
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("parse_rational: empty string");
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const long long n = std::stoll(text.substr(0, slash));
    const long long d = std::stoll(text.substr(slash + 1));
    return Rational(n, d);
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(std::stoll(text));
  const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  const std::size_t frac_digits = text.size() - dot - 1;
  if (frac_digits > 18) throw std::invalid_argument("parse_rational: too many decimal digits");
  long long den = 1;
  for (std::size_t i = 0; i < frac_digits; ++i) {
    den = detail::checked_ll((__int128)den * 10, "parse");
  }
  return Rational(std::stoll(digits), den);
}

}  // namespace herd
