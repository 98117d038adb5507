#pragma once

/// @file series.hpp
/// Puiseux expansion of f in powers of sqrt|t - t1| at square-root
/// singularities (vertical launches and landings), and the regularized
/// u = f^2 form of the equation, which is smooth across {u = 0}.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "capcone/core.hpp"
#include "capcone/detail/power_series.hpp"

namespace capcone {

/// f(t) = sum_j c_j |t - t1|^{j/2} on the branch side sign(t - t1) = sign.
/// The branch is forced by -(t - t1) A(t1) > 0, so sign = -sgn A(t1).
struct SeriesExpansion {
  ConeParams params;
  double t1 = 0;             ///< anchor in (0,1) away from sqrt(alpha)
  double c0 = 0;             ///< f(t1)
  int sign = +1;             ///< branch direction, sign of t - t1
  std::vector<double> coeffs;  ///< c_0..c_K
  double trust_radius = 0;

  int order() const { return int(coeffs.size()) - 1; }
  double c(std::size_t j) const { return j < coeffs.size() ? coeffs[j] : 0.0; }
};

namespace detail {

/// Residual series of the capillary equation under the substitution
/// t = t1 + sign * s^2, f = sum c_j s^j, multiplied by s^3 to clear the
/// singular factors.  The true expansion makes every coefficient vanish.
inline PowerSeries capillary_series_residual(const ConeParams& p, double t1,
                                             int sign,
                                             const std::vector<double>& c) {
  const std::size_t len = c.size() + 3;
  const double lam = p.lambda;

  PowerSeries f(len), dP(len), dQ(len);
  for (std::size_t j = 0; j < c.size(); ++j) {
    f.at(j) = c[j];
    if (j >= 1) {
      const double jd = double(j);
      dP.at(j - 1) = 0.5 * sign * jd * c[j];
      dQ.at(j - 1) = 0.25 * jd * (jd - 2.0) * c[j];
    }
  }

  PowerSeries t(len);
  t.at(0) = t1;
  t.at(2) = double(sign);
  const PowerSeries a = t - p.alpha() * t.reciprocal();
  const PowerSeries omt2 = PowerSeries(len, 1.0) - t * t;
  const PowerSeries denom = (PowerSeries(len, 1.0) + lam * (f * f)).reciprocal();

  PowerSeries s1(len);
  s1.at(1) = 1.0;
  const PowerSeries sf = f.shifted(1);

  // s^3 * [(1-t^2) f'' + (f - t f') + (n-2)(1 + (1-t^2) L f'^2/(1+L f^2))(f - A f')]
  PowerSeries gate = s1.shifted(1);  // s^2
  gate += omt2 * (lam * (dP * dP)) * denom;
  PowerSeries res = omt2 * dQ + f.shifted(3) - t * dP.shifted(2);
  res += double(p.n - 2) * (gate * (sf - a * dP));
  return res;
}

}  // namespace detail

/// Regular slope of u = f^2 at a contact point u = 0: the nonzero value
/// making the u-equation smooth across the zero.
inline double regular_u_slope(const ConeParams& p, double t) {
  detail::require_interior(t, "regular_u_slope");
  if (!(p.lambda > 0.0))
    throw std::invalid_argument("regular_u_slope: needs lambda > 0");
  return -2.0 / ((p.n - 2) * p.lambda * coeff_A(p, t));
}

/// Constructs the expansion of f at a square-root singularity by recursive
/// substitution into the equation.  The leading coefficient is the closed
/// form c_1 = sqrt(2 (1 + L c0^2) / (L (n-2) |A(t1)|)).
inline SeriesExpansion build_series(const ConeParams& p, double t1, double c0,
                                    int order = 8) {
  detail::require_interior(t1, "build_series");
  if (!(p.lambda > 0.0))
    throw std::invalid_argument("build_series: needs lambda > 0");
  if (order < 2) throw std::invalid_argument("build_series: order >= 2");
  const double a1 = coeff_A(p, t1);
  if (std::fabs(t1 - p.sqrt_alpha()) < 1e-9)
    throw AnchorAtAlphaError("build_series: anchor at sqrt(alpha), A = 0");

  const int sign = a1 < 0 ? +1 : -1;
  const double c1 =
      std::sqrt(2.0 * (1.0 + p.lambda * c0 * c0) /
                (p.lambda * (p.n - 2) * std::fabs(a1)));

  SeriesExpansion e;
  e.params = p;
  e.t1 = t1;
  e.c0 = c0;
  e.sign = sign;
  e.coeffs = detail::solve_puiseux(
      [&](const std::vector<double>& c) {
        return detail::capillary_series_residual(p, t1, sign, c);
      },
      c0, c1, std::size_t(order));
  e.trust_radius = 0.1 * std::fabs(a1) * std::min(t1, 1.0 - t1);
  return e;
}

/// Term-wise evaluation of the expansion; f' is the term-wise derivative.
/// At the anchor itself the slope is signed infinity.
inline PhasePoint eval_series(const SeriesExpansion& e, double t) {
  const double dt = t - e.t1;
  if (dt != 0.0 && (dt > 0) != (e.sign > 0))
    throw std::domain_error("eval_series: t on the wrong branch side");
  if (std::fabs(dt) > e.trust_radius)
    throw TrustRadiusError("eval_series: outside trust radius");
  if (dt == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    return PhasePoint{t, e.c0, e.sign > 0 ? inf : -inf};
  }
  const double s = std::sqrt(std::fabs(dt));
  // f = sum c_j s^j ; df/dt = (sign / (2 s)) sum j c_j s^{j-1}
  double f = 0.0, g = 0.0;
  for (int j = e.order(); j >= 1; --j) {
    f = f * s + e.coeffs[j];
    g = g * s + double(j) * e.coeffs[j];
  }
  f = f * s + e.coeffs[0];
  return PhasePoint{t, f, e.sign * g / (2.0 * s)};
}

/// Term-wise second derivative of the expansion, f'' = (1/4) sum j(j-2) c_j
/// s^{j-4}; used to measure the truncation residual of the equation.
inline double eval_series_fpp(const SeriesExpansion& e, double t) {
  const double dt = t - e.t1;
  if (dt == 0.0 || (dt > 0) != (e.sign > 0))
    throw std::domain_error("eval_series_fpp: t on the wrong branch side");
  if (std::fabs(dt) > e.trust_radius)
    throw TrustRadiusError("eval_series_fpp: outside trust radius");
  const double s = std::sqrt(std::fabs(dt));
  double q = 0.0;
  for (int j = e.order(); j >= 1; --j)
    q = q * s + 0.25 * double(j) * (double(j) - 2.0) * e.coeffs[j];
  return q / (s * s * s);
}

/// u'' solved from the u = f^2 form of the equation.  For u > 0 this is the
/// exact push-forward of rhs_capillary; at u = 0 only the regular slopes
/// are admissible and the smooth continuation value is returned.
inline double rhs_u(const ConeParams& p, double t, double u, double up) {
  detail::require_interior(t, "rhs_u");
  if (!(p.lambda > 0.0))
    throw std::invalid_argument("rhs_u: needs lambda > 0");
  const double lam = p.lambda;
  const double a = coeff_A(p, t);
  const double omt2 = 1.0 - t * t;

  if (u == 0.0) {
    if (std::fabs(up) <= 1e-8) return 0.0;  // the zero solution
    const double ur = regular_u_slope(p, t);
    if (std::fabs(up - ur) > 1e-8 * std::fabs(ur))
      throw IrregularContactError("rhs_u: inadmissible slope at u = 0");
    // u'' at the contact from the expansion of f: u = c1^2 s^2 + ... with
    // s^2 = |t - t1|, so u'' = 2 (2 c1 c3 + c2^2).
    const SeriesExpansion e = build_series(p, t, 0.0, 4);
    return 2.0 * (2.0 * e.c(1) * e.c(3) + e.c(2) * e.c(2));
  }

  const double bracket = 1.0 + (p.n - 2) * lam * a * up / (2.0 * (1.0 + lam * u));
  double acc = -(2.0 * u - t * up);
  acc += omt2 * up * up * bracket / (2.0 * u);
  acc -= (p.n - 2) *
         (2.0 * u - a * up + omt2 * lam * up * up / (2.0 * (1.0 + lam * u)));
  return acc / omt2;
}

}  // namespace capcone
