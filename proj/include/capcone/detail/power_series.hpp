#pragma once

/// @file power_series.hpp
/// Minimal truncated power-series arithmetic over double, used to compute
/// Puiseux coefficients at square-root singularities by order-by-order
/// matching.  All series share a fixed truncation length.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace capcone::detail {

class PowerSeries {
 public:
  explicit PowerSeries(std::size_t len) : c_(len, 0.0) {}
  PowerSeries(std::size_t len, double c0) : c_(len, 0.0) {
    if (len) c_[0] = c0;
  }

  std::size_t size() const { return c_.size(); }
  double operator[](std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }
  double& at(std::size_t i) { return c_[i]; }

  PowerSeries& operator+=(const PowerSeries& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o[i];
    return *this;
  }
  PowerSeries& operator-=(const PowerSeries& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o[i];
    return *this;
  }
  friend PowerSeries operator+(PowerSeries a, const PowerSeries& b) {
    return a += b;
  }
  friend PowerSeries operator-(PowerSeries a, const PowerSeries& b) {
    return a -= b;
  }
  friend PowerSeries operator*(const PowerSeries& a, const PowerSeries& b) {
    PowerSeries r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) continue;
      for (std::size_t j = 0; i + j < a.size(); ++j) r.c_[i + j] += a[i] * b[j];
    }
    return r;
  }
  friend PowerSeries operator*(double s, PowerSeries a) {
    for (auto& x : a.c_) x *= s;
    return a;
  }

  /// Multiplication by the monomial x^m (shift of coefficients).
  PowerSeries shifted(std::size_t m) const {
    PowerSeries r(size());
    for (std::size_t i = 0; i + m < size(); ++i) r.c_[i + m] = c_[i];
    return r;
  }

  /// 1/this; requires a nonzero constant term.
  PowerSeries reciprocal() const {
    if (c_.empty() || c_[0] == 0.0)
      throw std::domain_error("PowerSeries::reciprocal: zero constant term");
    PowerSeries r(size());
    r.c_[0] = 1.0 / c_[0];
    for (std::size_t m = 1; m < size(); ++m) {
      double acc = 0.0;
      for (std::size_t i = 1; i <= m; ++i) acc += c_[i] * r.c_[m - i];
      r.c_[m] = -acc / c_[0];
    }
    return r;
  }

 private:
  std::vector<double> c_;
};

/// Solves an order-by-order matching problem for Puiseux coefficients.
///
/// `residual(c)` maps a coefficient vector c[0..K] to the coefficients of a
/// residual series that the true expansion annihilates.  The residual at
/// order m-1 is affine in c[m]; coefficients c[0], c[1] are supplied by the
/// caller (value and leading closed form) and c[2..K] are solved here.
inline std::vector<double> solve_puiseux(
    const std::function<PowerSeries(const std::vector<double>&)>& residual,
    double c0, double c1, std::size_t order) {
  std::vector<double> c(order + 1, 0.0);
  c[0] = c0;
  c[1] = c1;
  for (std::size_t m = 2; m <= order; ++m) {
    c[m] = 0.0;
    const double r0 = residual(c)[m - 1];
    c[m] = 1.0;
    const double r1 = residual(c)[m - 1];
    const double slope = r1 - r0;
    if (!(std::fabs(slope) > 1e-14 * (1.0 + std::fabs(r0))))
      throw std::domain_error(
          "solve_puiseux: degenerate order-" + std::to_string(m) +
          " equation");
    c[m] = -r0 / slope;
  }
  return c;
}

}  // namespace capcone::detail
