#pragma once

/// @file roots.hpp
/// Bracketing root helpers.  Bisection is used everywhere a scan provides
/// a sign change: it is immune to the -inf sentinels and classification
/// jumps that show up across vertical-landing onsets.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace capcone::detail {

/// Bisection of f on [lo, hi] with f(lo) f(hi) <= 0, to |hi-lo| <= tol_t.
template <class F>
double bisect(F&& f, double lo, double hi, double tol_t) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw std::invalid_argument("bisect: no sign change on bracket");
  while (std::fabs(hi - lo) > tol_t) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Bisection on a boolean predicate: returns the boundary point of
/// {pred = true}, assuming pred(lo) = true and pred(hi) = false.
template <class P>
double bisect_predicate(P&& pred, double lo, double hi, double tol_t) {
  while (std::fabs(hi - lo) > tol_t) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (pred(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace capcone::detail
