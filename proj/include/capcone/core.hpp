#pragma once

/// @file core.hpp
/// Parameter space, governing equations and pointwise diagnostics for the
/// equivariant capillary cone ODE
///
///   (1-t^2) f'' + (f - t f') + (n-2) (1 + (1-t^2) L f'^2/(1+L f^2)) (f - A f') = 0
///
/// with A(t) = t - alpha/t, alpha = (k-1)/(n-2), and L the capillary
/// parameter (L = 0 is the linear regime, L = 1 the reference equation).

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace capcone {

/// |t| or |1-t| below this is treated as sitting on a singular point.
inline constexpr double singular_guard = 1e-12;

/// Integration never continues past this distance from t = 0 or t = 1.
inline constexpr double domain_margin = 1e-9;

struct CapconeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Evaluation requested at / too close to t = 0 or t = 1.
struct SingularPointError : CapconeError {
  using CapconeError::CapconeError;
};

/// Series anchor too close to sqrt(alpha), where A vanishes.
struct AnchorAtAlphaError : CapconeError {
  using CapconeError::CapconeError;
};

/// Series evaluation outside the trust radius of the expansion.
struct TrustRadiusError : CapconeError {
  using CapconeError::CapconeError;
};

/// u = 0 contact with a slope matching neither regular value.
struct IrregularContactError : CapconeError {
  using CapconeError::CapconeError;
};

/// A scan failed to bracket the root it was looking for.
struct BracketError : CapconeError {
  using CapconeError::CapconeError;
};

/// The step controller drove the step size below its floor.
struct StepUnderflowError : CapconeError {
  StepUnderflowError(const std::string& msg, double where)
      : CapconeError(msg), t(where) {}
  double t;
};

/// A trajectory terminated in a way that cannot be classified
/// (borderline pole vs. vertical landing).
struct ClassificationError : CapconeError {
  using CapconeError::CapconeError;
};

/// The (n, k, lambda) triple selecting one instance of the equation.
struct ConeParams {
  int n = 4;
  int k = 2;
  double lambda = 1.0;  ///< may be +inf; normalize() maps it to 1

  double alpha() const { return double(k - 1) / double(n - 2); }
  double sqrt_alpha() const { return std::sqrt(alpha()); }

  /// Parameters for the involution t <-> sqrt(1-t^2), which exchanges
  /// k and n-k.
  ConeParams swapped() const { return ConeParams{n, n - k, lambda}; }

  /// lambda = +inf is only a compactification device; solutions correspond
  /// to lambda = 1 solutions under the amplitude rescaling, so solvers work
  /// on the normalized instance.
  ConeParams normalized() const {
    ConeParams p = *this;
    if (std::isinf(p.lambda)) p.lambda = 1.0;
    return p;
  }
};

inline ConeParams make_params(int n, int k, double lambda = 1.0) {
  if (n < 4) throw std::invalid_argument("make_params: need n >= 4");
  if (k < 2 || k > n - 2)
    throw std::invalid_argument("make_params: need 2 <= k <= n-2");
  if (!(lambda >= 0.0))
    throw std::invalid_argument("make_params: need lambda >= 0");
  return ConeParams{n, k, lambda};
}

/// A slope that is either a finite real or symbolically infinite.
/// Vertical shots are exact objects, not large floats.
struct Slope {
  double value = 0.0;
  bool finite = true;

  static Slope infinite() { return Slope{0.0, false}; }
  static Slope of(double v) { return Slope{v, true}; }
};

/// State (t, f, f') of the profile equation at an interior point.
struct PhasePoint {
  double t = 0;
  double f = 0;
  double fp = 0;
};

/// Pointwise diagnostic quantities; `ratio` is f'/h and is only defined
/// where h does not vanish.
struct Diagnostics {
  double A = 0;
  double h = 0;
  double psi = 0;
  double S = 0;
  double Psi = 0;
  std::optional<double> ratio;
};

namespace detail {
inline void require_interior(double t, const char* who) {
  if (t < singular_guard || t > 1.0 - singular_guard)
    throw SingularPointError(std::string(who) + ": t = " + std::to_string(t) +
                             " is at a singular point");
}
}  // namespace detail

/// A(t) = t - alpha/t.  Vanishes exactly at t = sqrt(alpha).
inline double coeff_A(const ConeParams& p, double t) {
  if (t <= 0.0) throw std::domain_error("coeff_A: t must be positive");
  return t - p.alpha() / t;
}

/// f'' solved from the capillary equation at an interior state.
inline double rhs_capillary(const ConeParams& p, const PhasePoint& s) {
  detail::require_interior(s.t, "rhs_capillary");
  if (!std::isfinite(p.lambda))
    throw std::invalid_argument("rhs_capillary: lambda must be finite");
  const double omt2 = 1.0 - s.t * s.t;
  const double a = coeff_A(p, s.t);
  const double q =
      1.0 + omt2 * p.lambda * s.fp * s.fp / (1.0 + p.lambda * s.f * s.f);
  return -((s.f - s.t * s.fp) + (p.n - 2) * q * (s.f - a * s.fp)) / omt2;
}

/// f'' solved from the hypergeometric Legendre form of the lambda = 0
/// equation; agrees with rhs_capillary at lambda = 0 identically.
inline double rhs_linear(const ConeParams& p, const PhasePoint& s) {
  detail::require_interior(s.t, "rhs_linear");
  const double omt2 = 1.0 - s.t * s.t;
  return -((p.n - 1) * (s.f - s.t * s.fp) + (p.k - 1) * s.fp / s.t) / omt2;
}

/// All pointwise diagnostics at a state: h = f - A f', psi = sqrt|t^2-alpha|,
/// S = (n-1)/(1-t^2) + (n-2) L f'^2/(1+L f^2), Psi = f h - 1/(n-2).
inline Diagnostics diagnostics(const ConeParams& p, const PhasePoint& s) {
  detail::require_interior(s.t, "diagnostics");
  Diagnostics d;
  d.A = coeff_A(p, s.t);
  d.h = s.f - d.A * s.fp;
  d.psi = std::sqrt(std::fabs(s.t * s.t - p.alpha()));
  const double lam = std::isfinite(p.lambda) ? p.lambda : 1.0;
  d.S = (p.n - 1) / (1.0 - s.t * s.t) +
        (p.n - 2) * lam * s.fp * s.fp / (1.0 + lam * s.f * s.f);
  d.Psi = s.f * d.h - 1.0 / (p.n - 2);
  if (d.h != 0.0) d.ratio = s.fp / d.h;
  return d;
}

/// Right-hand side of the identity h' = A S h - alpha(1-alpha)/(t^2(1-t^2)) f'.
inline double h_prime_identity(const ConeParams& p, const PhasePoint& s) {
  const Diagnostics d = diagnostics(p, s);
  const double al = p.alpha();
  return d.A * d.S * d.h -
         al * (1.0 - al) / (s.t * s.t * (1.0 - s.t * s.t)) * s.fp;
}

/// Right-hand side of the Riccati equation satisfied by r = f'/h.
inline double ratio_riccati_rhs(const ConeParams& p, const PhasePoint& s,
                                double r) {
  const Diagnostics d = diagnostics(p, s);
  const double al = p.alpha();
  const double omt2 = 1.0 - s.t * s.t;
  return al * (1.0 - al) / (s.t * s.t * omt2) * r * r +
         (al / (s.t * omt2) - d.A * d.S) * r - d.S;
}

/// Contact angle theta = arctan(sqrt(1-t*^2) |f'(t*)|) at a zero t* of f.
/// Returns exactly pi/2 for a symbolically infinite slope.
inline double contact_angle(double t_star, Slope fp_star) {
  if (!(t_star > 0.0 && t_star < 1.0))
    throw std::domain_error("contact_angle: t* must lie in (0,1)");
  if (!fp_star.finite) return std::numbers::pi / 2;
  return std::atan(std::sqrt(1.0 - t_star * t_star) * std::fabs(fp_star.value));
}

/// Pointwise involution map: a state of the (n,k) equation becomes a state
/// of the (n,n-k) equation at th = sqrt(1-t^2), with f unchanged and the
/// slope transformed by the chain rule, fp_new = -(th/t) fp.  Contact
/// angles are preserved exactly: (1-th^2) fp_new^2 = (1-t^2) fp^2.
inline PhasePoint involute_point(const PhasePoint& s) {
  const double th = std::sqrt(1.0 - s.t * s.t);
  return PhasePoint{th, s.f, -(th / s.t) * s.fp};
}

}  // namespace capcone
