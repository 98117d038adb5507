#pragma once

/// @file special.hpp
/// Gauss hypergeometric solutions of the lambda = 0 equation: power-series
/// evaluation of 2F1 with linear transformations toward x = 1 (including
/// the logarithmic degenerate cases), the even solutions f_{n,k} and their
/// first zeros, and the symmetric kernel element used for the n = 2k
/// shallow-angle limit.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "capcone/core.hpp"
#include "capcone/detail/roots.hpp"

namespace capcone {

/// Parameters of 2F1(a, b; c; x).  For the lambda = 0 equation the even
/// solution has a = (n-1)/2, b = -1/2, c = k/2 in the variable x = t^2.
struct HypergeomSpec {
  double a = 0, b = 0, c = 0;

  static HypergeomSpec even_solution(int n, int k) {
    return {0.5 * (n - 1), -0.5, 0.5 * k};
  }
  /// Parameters of d/dx 2F1 = (ab/c) 2F1(a+1, b+1; c+1; x).
  HypergeomSpec shifted() const { return {a + 1, b + 1, c + 1}; }
};

namespace detail {

inline bool near_int(double x, double tol = 1e-9) {
  return std::fabs(x - std::round(x)) < tol;
}

/// Lanczos approximation (g = 7, 9 terms), with reflection for x < 1/2.
inline double gamma_fn(double x) {
  static constexpr double coef[9] = {
      0.99999999999980993,  676.5203681218851,    -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,  12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    if (near_int(x, 1e-14))
      return std::numeric_limits<double>::infinity();  // pole
    return std::numbers::pi / (std::sin(std::numbers::pi * x) *
                                gamma_fn(1.0 - x));
  }
  const double z = x - 1.0;
  double s = coef[0];
  for (int i = 1; i < 9; ++i) s += coef[i] / (z + i);
  const double t = z + 7.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) *
         std::exp(-t) * s;
}

/// 1/Gamma(x); exactly zero at the poles x = 0, -1, -2, ...
inline double rgamma(double x) {
  if (x <= 0.0 && near_int(x, 1e-12)) return 0.0;
  return 1.0 / gamma_fn(x);
}

/// Digamma by recurrence into the asymptotic regime.
inline double digamma(double x) {
  if (x <= 0.0 && near_int(x, 1e-12))
    throw std::domain_error("digamma: pole at nonpositive integer");
  double acc = 0.0;
  while (x < 8.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  // ln x - 1/(2x) - sum B_{2j}/(2j x^{2j})
  double series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 -
                  inv2 * (1.0 / 240 - inv2 * (1.0 / 132 -
                  inv2 * (691.0 / 32760 - inv2 / 12))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

/// Maclaurin series of 2F1; converges comfortably for x <= 1/2.
inline double hyp2f1_series(double a, double b, double c, double x) {
  double term = 1.0, sum = 1.0;
  for (int j = 0; j < 600; ++j) {
    term *= (a + j) * (b + j) / ((c + j) * (j + 1.0)) * x;
    sum += term;
    if (std::fabs(term) < 1e-18 * (1.0 + std::fabs(sum))) return sum;
  }
  throw CapconeError("hyp2f1_series: no convergence");
}

/// 2F1(a, b; a+b+m; z) for integer m >= 0 through the logarithmic
/// connection formula in w = 1 - z.
inline double hyp2f1_log_case(double a, double b, int m, double w) {
  const double cc = a + b + m;
  const double lw = std::log(w);
  double out = 0.0;

  if (m > 0) {
    // finite part: G(m) G(c) / (G(a+m) G(b+m)) * sum_{s<m} ...
    double pre = gamma_fn(cc) * gamma_fn(double(m)) * rgamma(a + m) *
                 rgamma(b + m);
    double term = 1.0, sum = 0.0;
    for (int s = 0; s < m; ++s) {
      if (s > 0)
        term *= (a + (s - 1)) * (b + (s - 1)) /
                ((1.0 - m + (s - 1)) * double(s)) * w;
      sum += term;
    }
    out += pre * sum;
  }

  // logarithmic part
  double sgn = (m % 2 == 0) ? 1.0 : -1.0;
  double pre = sgn * gamma_fn(cc) * rgamma(a) * rgamma(b) * std::pow(w, m);
  if (pre != 0.0) {
    double fac = 1.0;
    for (int j = 1; j <= m; ++j) fac *= j;  // m!
    double term = 1.0 / fac;
    double sum = 0.0;
    for (int s = 0; s < 600; ++s) {
      if (s > 0)
        term *= (a + m + (s - 1)) * (b + m + (s - 1)) /
                (double(s) * double(s + m)) * w;
      const double bracket = lw - digamma(s + 1.0) - digamma(double(s + m + 1)) +
                             digamma(a + m + s) + digamma(b + m + s);
      const double add = term * bracket;
      sum += add;
      if (s > 3 && std::fabs(add) < 1e-18 * (1.0 + std::fabs(sum))) break;
    }
    out -= pre * sum;
  }
  return out;
}

}  // namespace detail

/// 2F1(a, b; c; x) on [0, 1): series for x <= 1/2, linear transformation
/// to 1-x beyond, with the logarithmic branch when c-a-b is a nonpositive
/// integer.  Absolute accuracy about 1e-12 for the parameter families of
/// the lambda = 0 equation.
inline double hyp2f1(const HypergeomSpec& spec, double x) {
  const double a = spec.a, b = spec.b, c = spec.c;
  if (!(x >= 0.0 && x < 1.0))
    throw std::domain_error("hyp2f1: x must lie in [0,1)");
  if (x == 0.0) return 1.0;
  if (x <= 0.5) return detail::hyp2f1_series(a, b, c, x);

  const double w = 1.0 - x;
  const double d = c - a - b;
  if (!detail::near_int(d)) {
    const double t1 = detail::gamma_fn(c) * detail::gamma_fn(d) *
                      detail::rgamma(c - a) * detail::rgamma(c - b) *
                      detail::hyp2f1_series(a, b, 1.0 - d, w);
    const double t2 = std::pow(w, d) * detail::gamma_fn(c) *
                      detail::gamma_fn(-d) * detail::rgamma(a) *
                      detail::rgamma(b) *
                      detail::hyp2f1_series(c - a, c - b, 1.0 + d, w);
    return t1 + t2;
  }

  const int md = int(std::llround(d));
  if (md > 0)
    throw std::domain_error(
        "hyp2f1: positive integer c-a-b not needed by this family");
  // Euler transform onto the c = a' + b' + m case, m = -d >= 0
  const int m = -md;
  return std::pow(w, double(md)) *
         detail::hyp2f1_log_case(c - a, c - b, m, w);
}

/// The even solution f_{n,k}(t) = 2F1((n-1)/2, -1/2; k/2; t^2) of the
/// lambda = 0 equation, with f(0) = 1, f'(0) = 0.
inline double even_solution(int n, int k, double t) {
  return hyp2f1(HypergeomSpec::even_solution(n, k), t * t);
}

/// d/dt of even_solution, from the parameter-shifted series.
inline double even_solution_deriv(int n, int k, double t) {
  const HypergeomSpec s = HypergeomSpec::even_solution(n, k);
  return 2.0 * t * (s.a * s.b / s.c) * hyp2f1(s.shifted(), t * t);
}

/// Second derivative, one more parameter shift.
inline double even_solution_deriv2(int n, int k, double t) {
  const HypergeomSpec s = HypergeomSpec::even_solution(n, k);
  const HypergeomSpec s1 = s.shifted();
  const double r1 = s.a * s.b / s.c;
  const double r2 = s1.a * s1.b / s1.c;
  return 2.0 * r1 * hyp2f1(s1, t * t) +
         4.0 * t * t * r1 * r2 * hyp2f1(s1.shifted(), t * t);
}

/// First zero t_{n,k} of the even solution, by bisection; lies in
/// (sqrt(alpha), 1).
inline double first_zero(int n, int k) {
  const ConeParams p = make_params(n, k, 0.0);
  auto f = [&](double t) { return even_solution(n, k, t); };
  double lo = 0.05, flo = f(lo);
  double hi = 0.0;
  for (double t = 0.1; t < 0.999999; t = 0.5 * (t + 1.0)) {
    const double ft = f(t);
    if (flo * ft < 0) {
      hi = t;
      break;
    }
    lo = t;
    flo = ft;
  }
  if (hi == 0.0) throw BracketError("first_zero: no sign change found");
  const double z = detail::bisect(f, lo, hi, 1e-13);
  if (!(z > p.sqrt_alpha()))
    throw CapconeError("first_zero: zero below sqrt(alpha)");
  return z;
}

/// The symmetric kernel element for n = 2k, normalized to 1 at 1/sqrt(2):
/// f0(t) = (F(t) + F(sqrt(1-t^2))) / (2 F(1/sqrt2)) with F = f_{2k,k}.
/// Satisfies the lambda = 0 equation, is involution-symmetric, and tends
/// to -infinity as t -> 1.
inline double f0_symmetric(int k, double t) {
  if (!(t > 0.0 && t < 1.0))
    throw std::domain_error("f0_symmetric: t must lie in (0,1)");
  const int n = 2 * k;
  const double s = std::sqrt(1.0 - t * t);
  const double norm = 2.0 * even_solution(n, k, std::numbers::sqrt2 / 2.0);
  return (even_solution(n, k, t) + even_solution(n, k, s)) / norm;
}

inline double f0_symmetric_deriv(int k, double t) {
  const int n = 2 * k;
  const double s = std::sqrt(1.0 - t * t);
  const double norm = 2.0 * even_solution(n, k, std::numbers::sqrt2 / 2.0);
  return (even_solution_deriv(n, k, t) -
          (t / s) * even_solution_deriv(n, k, s)) /
         norm;
}

/// The zero of f0 in (1/sqrt2, 1).
inline double f0_zero(int k) {
  auto f = [&](double t) { return f0_symmetric(k, t); };
  const double lo = std::numbers::sqrt2 / 2.0 + 1e-6;
  double hi = 1.0 - 1e-9;
  if (!(f(lo) > 0) || !(f(hi) < 0))
    throw BracketError("f0_zero: bracket failed");
  return detail::bisect(f, lo, hi, 1e-13);
}

/// Endpoint gradient sqrt(1 - z^2) |f0'(z)| at the zero of f0; this is the
/// scale the one-phase normalization divides by, and the small-angle limit
/// of theta(a)/a for the symmetric family.
inline double f0_gradient(int k) {
  const double z = f0_zero(k);
  return std::sqrt(1.0 - z * z) * std::fabs(f0_symmetric_deriv(k, z));
}

/// Matching constant of the lambda = 0 problem, measured as the reciprocal
/// endpoint gradient of the normalized even solution at its first zero.
inline double matching_constant(int n, int k) {
  const double z = first_zero(n, k);
  return 1.0 /
         (std::sqrt(1.0 - z * z) * std::fabs(even_solution_deriv(n, k, z)));
}

}  // namespace capcone
