#pragma once

/// @file shoot.hpp
/// The matching solvers: per-angle capillary cones via the residual
/// R[t1] = (1-t1^2) f'(t1)^2 - (1-t2^2) f'(t2)^2, free-boundary cones via
/// the vertical-shot separatrix (bisected independently from both ends),
/// the symmetric n = 2k family, and the lambda = 0 one-phase profiles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "capcone/core.hpp"
#include "capcone/detail/roots.hpp"
#include "capcone/integrate.hpp"
#include "capcone/special.hpp"

namespace capcone {

enum class FamilyTag {
  per_angle,
  free_boundary,
  symmetric,
  one_phase_i,
  one_phase_ii
};

/// One evaluation of the shooting residual R[t1].  R is -inf at vertical
/// landings; shots that never return are recorded by their termination.
struct ResidualRecord {
  double t1 = 0;
  std::optional<double> tau;
  double R = std::numeric_limits<double>::quiet_NaN();
  ShotOutcome::Kind termination = ShotOutcome::Kind::no_zero_domain_end;
  bool vertical = false;

  bool positive() const { return std::isfinite(R) && R > 0; }
};

/// Runs the shot {f(t1) = 0, f'(t1) = slope} and forms the matching
/// residual.
inline ResidualRecord residual(const ConeParams& params, double t1,
                               double slope, Tolerances tol = {}) {
  if (!(slope > 0) || !std::isfinite(slope))
    throw std::invalid_argument("residual: slope must be finite positive");
  ResidualRecord rec;
  rec.t1 = t1;
  const ShotOutcome out =
      second_zero(ShotSpec{params, t1, 0.0, Slope::of(slope)}, tol);
  rec.termination = out.kind;
  if (!out.reached_zero()) return rec;
  rec.tau = out.t2;
  rec.vertical = out.vertical;
  if (out.vertical) {
    rec.R = -std::numeric_limits<double>::infinity();
    return rec;
  }
  const double tau = *out.t2, m = out.slope2->value;
  rec.R = (1.0 - t1 * t1) * slope * slope - (1.0 - tau * tau) * m * m;
  return rec;
}

/// A validated two-endpoint profile with a dense accessor.  Evaluation is
/// piecewise: square-root series caps at vertical endpoints, trajectory
/// legs in between, a cubic-balance contact model across steep finite
/// landings, and the involution mirror for reflected halves.
struct ConeProfile {
  struct Segment {
    enum class Kind { trajectory, series1, series2, mirror, contact };
    Kind kind;
    double ta, tb;   // coverage, ta < tb
    int piece = -1;  // trajectory index for Kind::trajectory
  };

  ConeParams params;
  FamilyTag family = FamilyTag::per_angle;
  double t1 = 0, t2 = 0;
  Slope slope1, slope2;
  double theta = 0;
  double t_critical = 0;
  double f_at_sqrt_alpha = 0;
  double match_defect = 0;  ///< stitch defect at sqrt(alpha), if stitched
  double scale = 1.0;       ///< amplitude factor applied on evaluation
  int bracket_count = 1;    ///< residual sign-change brackets seen
  bool involuted = false;   ///< evaluate through t <-> sqrt(1-t^2)

  std::vector<Trajectory> pieces;
  std::optional<SeriesExpansion> launch1, launch2;
  // contact model tail: f ~ m (t - t2) + kappa m^3 (t - t2)^2 / 2
  double contact_slope = 0;
  double contact_anchor = 0;
  std::vector<Segment> segments;

  PhasePoint eval(double t) const {
    PhasePoint s;
    if (involuted) {
      const double th = std::sqrt(1.0 - t * t);
      const PhasePoint inner = eval_raw(th);
      s = PhasePoint{t, inner.f, -(th / t) * inner.fp};
    } else {
      s = eval_raw(t);
    }
    s.f *= scale;
    s.fp *= scale;
    return s;
  }

  PhasePoint eval_raw(double t) const {
    for (const auto& seg : segments) {
      if (t < seg.ta - 1e-12 || t > seg.tb + 1e-12) continue;
      // the mirror delegates rightward; keep its upper boundary exclusive
      if (seg.kind == Segment::Kind::mirror && t > seg.tb - 1e-12) continue;
      switch (seg.kind) {
        case Segment::Kind::trajectory: {
          const auto& tr = pieces[std::size_t(seg.piece)];
          const double tc = std::clamp(t, std::min(tr.t_start, tr.t_end),
                                       std::max(tr.t_start, tr.t_end));
          return tr.state_at(tc);
        }
        case Segment::Kind::series1:
          return eval_series(*launch1, std::max(t, launch1->t1));
        case Segment::Kind::series2:
          return eval_series(*launch2, std::min(t, launch2->t1));
        case Segment::Kind::mirror: {
          const double th = std::sqrt(1.0 - t * t);
          PhasePoint s = eval_raw(th);
          return PhasePoint{t, s.f, -(th / t) * s.fp};
        }
        case Segment::Kind::contact: {
          const double kappa = detail::landing_kappa(params, contact_anchor);
          const double m = contact_slope, d = t - contact_anchor;
          return PhasePoint{t, m * d + 0.5 * kappa * m * m * m * d * d,
                            m + kappa * m * m * m * d};
        }
      }
    }
    throw std::domain_error("ConeProfile::eval: t outside profile coverage");
  }
};

/// Measured properties used by validation and the verification suites.
struct ProfileValidation {
  double ode_residual_sup = 0;  ///< sup |equation(f, f', f'')| interior
  double angle_defect = 0;      ///< |theta(t1) - theta(t2)|
  int critical_points = 0;      ///< interior sign changes of f'
  double h_min = 0;             ///< min of h = f - A f' over the interior
  bool zeros_straddle = false;  ///< t1 < sqrt(alpha) < t2
  double f_at_alpha = 0;
  double bound_margin = 0;      ///< 2 lambda^{-1/2}/sqrt(n) - f(sqrt(alpha))
};

namespace detail {

struct ScanResult {
  double lo = 0, hi = 0;  // bracketing pair
  int bracket_count = 0;
};

/// Walks a grid and reports the first predicate sign change (+ -> -),
/// counting all changes seen.
template <class P>
ScanResult scan_sign_change(P&& positive, const std::vector<double>& grid) {
  ScanResult r;
  bool have_prev = false;
  bool prev = false;
  double t_prev = 0;
  for (const double t : grid) {
    const bool s = positive(t);
    if (have_prev && prev && !s) {
      ++r.bracket_count;
      if (r.bracket_count == 1) {
        r.lo = t_prev;
        r.hi = t;
      }
    }
    have_prev = true;
    prev = s;
    t_prev = t;
  }
  return r;
}

inline std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    g[std::size_t(i)] = std::exp(llo + (lhi - llo) * i / double(count - 1));
  return g;
}

inline std::vector<double> lin_grid(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    g[std::size_t(i)] = lo + (hi - lo) * i / double(count - 1);
  return g;
}

/// Chains the f-form legs of a shot into profile segments, then patches
/// the terminal landing zone (u-form region) with the series cap or the
/// cubic-balance contact model so coverage reaches t2.
inline void append_shot_segments(ConeProfile& prof, const ShotOutcome& out) {
  for (const auto& leg : out.pieces) {
    if (leg.form != Form::f_form) continue;
    const double a = std::min(leg.t_start, leg.t_end);
    const double b = std::max(leg.t_start, leg.t_end);
    if (b - a <= 0) continue;
    prof.pieces.push_back(leg);
    prof.segments.push_back({ConeProfile::Segment::Kind::trajectory, a,
                             std::min(b, prof.t2),
                             int(prof.pieces.size()) - 1});
  }
  double cover = prof.segments.front().ta;
  for (const auto& s : prof.segments)
    if (s.ta <= cover + 1e-12) cover = std::max(cover, s.tb);
  if (cover >= prof.t2 - 1e-12) return;
  if (out.vertical) {
    prof.launch2 = build_series(prof.params, prof.t2, 0.0);
    prof.segments.push_back(
        {ConeProfile::Segment::Kind::series2, cover, prof.t2, -1});
  } else {
    prof.contact_slope = out.slope2->value;
    prof.contact_anchor = prof.t2;
    prof.segments.push_back(
        {ConeProfile::Segment::Kind::contact, cover, prof.t2, -1});
  }
}

/// Locates the critical point of a profile by a sign change of f'.
inline double find_critical(const ConeProfile& prof) {
  const double a = prof.t1 + 1e-7, b = prof.t2 - 1e-7;
  const int m = 512;
  double prev_t = a, prev = prof.eval(a).fp;
  for (int i = 1; i <= m; ++i) {
    const double t = a + (b - a) * i / double(m);
    const double fp = prof.eval(t).fp;
    if (prev > 0 && fp <= 0)
      return bisect([&](double x) { return prof.eval(x).fp; }, prev_t, t,
                    1e-13);
    prev = fp;
    prev_t = t;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Samples profile properties: equation residual on dense output (with
/// f'' from centered differences of f'), h positivity, critical points.
inline ProfileValidation validate_profile(const ConeProfile& prof,
                                          int samples = 400) {
  ProfileValidation v;
  const ConeParams& p = prof.params;
  const double sa = p.sqrt_alpha();
  v.zeros_straddle = prof.t1 < sa && sa < prof.t2;
  v.f_at_alpha = prof.eval(sa).f;
  if (p.lambda > 0)
    v.bound_margin =
        2.0 / (std::sqrt(double(p.n)) * std::sqrt(p.lambda)) - v.f_at_alpha;

  v.angle_defect = std::fabs(contact_angle(prof.t1, prof.slope1) -
                             contact_angle(prof.t2, prof.slope2));

  const double span = prof.t2 - prof.t1;
  const double fd = 1e-5 * span;
  const double margin = std::max(4.0 * fd, 1e-4 * span);
  v.h_min = std::numeric_limits<double>::infinity();
  double prev_fp = 0;
  bool have_prev = false;
  for (int i = 0; i <= samples; ++i) {
    const double t = (prof.t1 + margin) +
                     (span - 2 * margin) * i / double(samples);
    // keep the differencing stencil away from segment stitches
    bool near_seam = false;
    for (const auto& seg : prof.segments)
      if (std::fabs(t - seg.ta) < 2 * fd || std::fabs(t - seg.tb) < 2 * fd)
        near_seam = true;
    const PhasePoint s = prof.eval(t);
    const Diagnostics d = diagnostics(p, s);
    v.h_min = std::min(v.h_min, d.h);
    if (have_prev && prev_fp > 0 && s.fp <= 0) ++v.critical_points;
    prev_fp = s.fp;
    have_prev = true;
    if (near_seam) continue;
    const double fpp =
        (prof.eval(t + fd).fp - prof.eval(t - fd).fp) / (2.0 * fd);
    const double omt2 = 1.0 - t * t;
    const double lam = p.lambda;
    const double q =
        1.0 + omt2 * lam * s.fp * s.fp / (1.0 + lam * s.f * s.f);
    const double res =
        omt2 * fpp + (s.f - t * s.fp) + (p.n - 2) * q * (s.f - d.A * s.fp);
    v.ode_residual_sup = std::max(v.ode_residual_sup, std::fabs(res));
  }
  return v;
}

/// Free-boundary cone: independent separatrix bisections on both ends of
/// the vertical-shot dichotomy, stitched at sqrt(alpha).
inline ConeProfile solve_free_boundary(int n, int k, Tolerances tol = {}) {
  const ConeParams p = make_params(n, k, 1.0);
  const double sa = p.sqrt_alpha();

  auto reaches_fwd = [&](double t1) {
    return vertical_shot(p, t1, 0.0, tol).reached_zero();
  };
  auto grid_lo = detail::log_grid(1e-3 * sa, sa * (1.0 - 1e-3), 64);
  double lo = 0, hi = 0;
  {
    bool prev = reaches_fwd(grid_lo.front());
    if (!prev)
      throw BracketError("solve_free_boundary: smallest t1 does not return");
    for (std::size_t i = 1; i < grid_lo.size(); ++i) {
      const bool s = reaches_fwd(grid_lo[i]);
      if (prev && !s) {
        lo = grid_lo[i - 1];
        hi = grid_lo[i];
        break;
      }
      prev = s;
    }
    if (hi == 0)
      throw BracketError("solve_free_boundary: no vertical-shot transition");
  }
  const double t1s = detail::bisect_predicate(reaches_fwd, lo, hi, 1e-11);

  // mirrored dichotomy for the landing anchor
  auto reaches_bwd = [&](double t2) {
    return vertical_shot(p, t2, 0.0, tol).reached_zero();
  };
  auto grid_hi = detail::lin_grid(sa * (1.0 + 1e-3) + 1e-6, 1.0 - 1e-4, 64);
  double blo = 0, bhi = 0;
  {
    bool prev = reaches_bwd(grid_hi.front());
    for (std::size_t i = 1; i < grid_hi.size(); ++i) {
      const bool s = reaches_bwd(grid_hi[i]);
      if (!prev && s) {
        blo = grid_hi[i - 1];
        bhi = grid_hi[i];
        break;
      }
      prev = s;
    }
    if (bhi == 0)
      throw BracketError("solve_free_boundary: no backward transition");
  }
  const double t2s = detail::bisect_predicate(
      [&](double t2) { return !reaches_bwd(t2); }, blo, bhi, 1e-11);

  ConeProfile prof;
  prof.params = p;
  prof.family = FamilyTag::free_boundary;
  prof.t1 = t1s;
  prof.t2 = t2s;
  prof.slope1 = Slope::infinite();
  prof.slope2 = Slope::infinite();
  prof.theta = std::numbers::pi / 2;

  prof.launch1 = build_series(p, t1s, 0.0);
  prof.launch2 = build_series(p, t2s, 0.0);
  const double d1 = 1e-5;
  const PhasePoint h1 = eval_series(*prof.launch1, t1s + d1);
  const PhasePoint h2 = eval_series(*prof.launch2, t2s - d1);
  Trajectory fwd = integrate(p, Form::f_form, h1, +1, {ev_reach(sa)}, tol);
  Trajectory bwd = integrate(p, Form::f_form, h2, -1, {ev_reach(sa)}, tol);
  if (fwd.stop != StopReason::event || bwd.stop != StopReason::event)
    throw ClassificationError("solve_free_boundary: stitch legs failed");
  const PhasePoint mf = fwd.end_state(), mb = bwd.end_state();
  prof.match_defect = std::fabs(mf.f - mb.f) + std::fabs(mf.fp - mb.fp);
  prof.f_at_sqrt_alpha = mf.f;

  prof.pieces.push_back(std::move(fwd));
  prof.pieces.push_back(std::move(bwd));
  prof.segments = {
      {ConeProfile::Segment::Kind::series1, t1s, t1s + d1, -1},
      {ConeProfile::Segment::Kind::trajectory, t1s + d1, sa, 0},
      {ConeProfile::Segment::Kind::trajectory, sa, t2s - d1, 1},
      {ConeProfile::Segment::Kind::series2, t2s - d1, t2s, -1}};
  prof.t_critical = detail::find_critical(prof);
  return prof;
}

/// Per-angle capillary cone by bisection of the matching residual R[t1]
/// with launch slope tan(theta)/sqrt(1-t1^2).  Near pi/2 the scan window
/// is anchored at the free-boundary solution.
inline ConeProfile solve_capillary_cone(int n, int k, double theta,
                                        Tolerances tol = {}) {
  const ConeParams p = make_params(n, k, 1.0);
  const double sa = p.sqrt_alpha();
  if (!(theta > 0.0 && theta < std::numbers::pi / 2 - 1e-9))
    throw std::invalid_argument(
        "solve_capillary_cone: need theta in (0, pi/2); use "
        "solve_free_boundary at pi/2");

  auto slope_of = [&](double t1) {
    return std::tan(theta) / std::sqrt(1.0 - t1 * t1);
  };
  auto rpos = [&](double t1) {
    return residual(p, t1, slope_of(t1), tol).positive();
  };

  double scan_lo = 1e-3 * sa;
  if (theta > 1.55) {
    // conditioning: anchor the window at the free-boundary matching point
    const ConeProfile fb = solve_free_boundary(n, k, tol);
    scan_lo = 0.5 * fb.t1;
  }

  detail::ScanResult sc;
  for (int widen = 0; widen < 3 && sc.bracket_count == 0; ++widen) {
    sc = detail::scan_sign_change(rpos,
                                  detail::log_grid(scan_lo, sa * (1 - 1e-3),
                                                   200));
    scan_lo *= 1e-2;
  }
  if (sc.bracket_count == 0)
    throw BracketError("solve_capillary_cone: no sign change of R in scan");

  const double t1m = detail::bisect_predicate(rpos, sc.lo, sc.hi, 1e-11);

  const ShotOutcome out =
      second_zero(ShotSpec{p, t1m, 0.0, Slope::of(slope_of(t1m))}, tol);
  if (!out.reached_zero() || out.vertical)
    throw ClassificationError(
        "solve_capillary_cone: matched shot did not land transversally");

  ConeProfile prof;
  prof.params = p;
  prof.family = FamilyTag::per_angle;
  prof.t1 = t1m;
  prof.t2 = *out.t2;
  prof.slope1 = Slope::of(slope_of(t1m));
  prof.slope2 = *out.slope2;
  prof.theta = theta;
  prof.bracket_count = sc.bracket_count;
  detail::append_shot_segments(prof, out);
  prof.t_critical = detail::find_critical(prof);
  prof.f_at_sqrt_alpha = prof.eval(sa).f;
  return prof;
}

/// Symmetric family member for n = 2k: integrate from the critical point
/// {f(1/sqrt2) = a, f'(1/sqrt2) = 0} and reflect through t <-> sqrt(1-t^2).
/// Empty if the shot blows up before reaching zero.
inline std::optional<ConeProfile> solve_symmetric_family(int k, double a,
                                                         Tolerances tol = {}) {
  if (!(a > 0))
    throw std::invalid_argument("solve_symmetric_family: need a > 0");
  const ConeParams p = make_params(2 * k, k, 1.0);
  const double rc = std::numbers::sqrt2 / 2.0;
  const ShotOutcome out = run_shot(p, PhasePoint{rc, a, 0.0}, +1, tol);
  if (!out.reached_zero()) return std::nullopt;

  ConeProfile prof;
  prof.params = p;
  prof.family = FamilyTag::symmetric;
  prof.t2 = *out.t2;
  prof.t1 = std::sqrt(1.0 - prof.t2 * prof.t2);
  prof.slope2 = *out.slope2;
  prof.slope1 = out.slope2->finite
                    ? Slope::of(-(prof.t2 / prof.t1) * out.slope2->value)
                    : Slope::infinite();
  prof.theta = contact_angle(prof.t2, prof.slope2);
  prof.t_critical = rc;
  prof.f_at_sqrt_alpha = a;

  detail::append_shot_segments(prof, out);
  // reflected left half evaluates through the mirror
  prof.segments.insert(prof.segments.begin(),
                       {ConeProfile::Segment::Kind::mirror, prof.t1, rc, -1});
  return prof;
}

/// Result of the symmetric-family endpoint search.
struct SymmetricFamilyLimit {
  double a_star = 0;       ///< sup { a : the shot from 1/sqrt2 reaches zero }
  double value_check = 0;  ///< f(1/sqrt2) of the backward-matched profile
  ConeProfile profile;     ///< the free-boundary member at a*
};

/// a*_k by bisection of the reach-zero / blow-up dichotomy, plus the
/// vertical profile reconstructed independently by matching a backward
/// vertical shot to the critical point at 1/sqrt2.
inline SymmetricFamilyLimit find_a_star(int k, Tolerances tol = {}) {
  if (k < 2) throw std::invalid_argument("find_a_star: need k >= 2");
  const ConeParams p = make_params(2 * k, k, 1.0);
  const double rc = std::numbers::sqrt2 / 2.0;
  auto reaches = [&](double a) {
    return run_shot(p, PhasePoint{rc, a, 0.0}, +1, tol).reached_zero();
  };
  const double bound = 2.0 / std::sqrt(2.0 * k);
  double lo = 0.5 * bound;
  while (!reaches(lo)) {
    lo *= 0.5;
    if (lo < 1e-8) throw BracketError("find_a_star: no returning shot found");
  }
  double hi = bound * (1.0 + 1e-9);
  while (reaches(hi)) {
    hi *= 1.25;  // paper bound says this does not happen
    if (hi > 10 * bound)
      throw BracketError("find_a_star: blow-up side not found");
  }
  SymmetricFamilyLimit lim;
  lim.a_star = detail::bisect_predicate(reaches, lo, hi, 1e-12);

  // backward vertical shots from candidate landings, matched on f' = 0 at
  // the critical point
  auto crit_slope = [&](double t2) {
    SeriesExpansion e = build_series(p, t2, 0.0);
    const PhasePoint h = eval_series(e, t2 - 1e-5);
    Trajectory tr = integrate(p, Form::f_form, h, -1,
                              {ev_reach(rc), ev_blowup_f(1e6),
                               ev_blowup_fp(1e6)},
                              tol);
    if (tr.stop != StopReason::event ||
        tr.stop_event->kind != EventKind::reach_t)
      return -std::numeric_limits<double>::infinity();
    return tr.end_state().fp;
  };
  auto grid = detail::lin_grid(rc * (1.0 + 2e-3), 1.0 - 1e-4, 64);
  double blo = 0, bhi = 0;
  {
    double prev = crit_slope(grid.front());
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double s = crit_slope(grid[i]);
      if (prev < 0 && s >= 0) {
        blo = grid[i - 1];
        bhi = grid[i];
        break;
      }
      prev = s;
    }
    if (bhi == 0) throw BracketError("find_a_star: no critical matching");
  }
  const double t2s = detail::bisect(crit_slope, blo, bhi, 1e-12);

  ConeProfile& prof = lim.profile;
  prof.params = p;
  prof.family = FamilyTag::symmetric;
  prof.t2 = t2s;
  prof.t1 = std::sqrt(1.0 - t2s * t2s);
  prof.slope1 = Slope::infinite();
  prof.slope2 = Slope::infinite();
  prof.theta = std::numbers::pi / 2;
  prof.t_critical = rc;
  prof.launch2 = build_series(p, t2s, 0.0);
  const PhasePoint h2 = eval_series(*prof.launch2, t2s - 1e-5);
  Trajectory bwd = integrate(p, Form::f_form, h2, -1, {ev_reach(rc)}, tol);
  lim.value_check = bwd.end_state().f;
  prof.f_at_sqrt_alpha = lim.value_check;
  prof.pieces.push_back(std::move(bwd));
  prof.segments = {
      {ConeProfile::Segment::Kind::mirror, prof.t1, rc, -1},
      {ConeProfile::Segment::Kind::trajectory, rc, t2s - 1e-5, 0},
      {ConeProfile::Segment::Kind::series2, t2s - 1e-5, t2s, -1}};
  return lim;
}

/// Even one-phase solution (type i): positive phase [0, t_zero], with
/// U = rho f(t) harmonic and |grad U| = 1 on the free boundary after the
/// gradient normalization.
struct EvenProfile {
  ConeParams params;
  double t_zero = 0;
  double slope_at_zero = 0;  ///< before scaling
  double scale = 1.0;
  Trajectory traj;           ///< from t = delta0 to the zero
  double delta0 = 1e-3;
  std::array<double, 4> taylor{};  ///< even Taylor coefficients at 0

  PhasePoint eval(double t) const {
    const double ta = std::fabs(t);
    PhasePoint s;
    if (ta >= delta0) {
      s = traj.state_at(std::min(ta, traj.t_end));
    } else {
      const double x = ta * ta;
      double f = 0, g = 0;
      for (int j = 3; j >= 0; --j) {
        f = f * x + taylor[std::size_t(j)];
        if (j >= 1) g = g * x + j * taylor[std::size_t(j)];
      }
      s = PhasePoint{ta, f, 2.0 * ta * g};
    }
    if (t < 0) {
      s.t = t;
      s.fp = -s.fp;
    }
    s.f *= scale;
    s.fp *= scale;
    return s;
  }
};

/// Type (i) one-phase solution by direct integration of the lambda = 0
/// equation from a Taylor start at the regular center t = 0.
inline EvenProfile solve_one_phase_even(int n, int k, Tolerances tol = {}) {
  const ConeParams p = make_params(n, k, 0.0);
  EvenProfile ep;
  ep.params = p;
  // a_{m+1} = a_m (m - 1/2)(m + (n-1)/2) / ((m+1)(m + k/2))
  ep.taylor[0] = 1.0;
  for (int m = 0; m < 3; ++m)
    ep.taylor[std::size_t(m + 1)] =
        ep.taylor[std::size_t(m)] * (m - 0.5) * (m + 0.5 * (n - 1)) /
        ((m + 1.0) * (m + 0.5 * k));
  const PhasePoint start = [&] {
    const double x = ep.delta0 * ep.delta0;
    double f = 0, g = 0;
    for (int j = 3; j >= 0; --j) {
      f = f * x + ep.taylor[std::size_t(j)];
      if (j >= 1) g = g * x + j * ep.taylor[std::size_t(j)];
    }
    return PhasePoint{ep.delta0, f, 2.0 * ep.delta0 * g};
  }();
  Tolerances tight = tol;
  tight.abs = std::min(tol.abs, 1e-12);
  tight.rel = std::min(tol.rel, 1e-12);
  ep.traj = integrate(p, Form::f_form, start, +1, {ev_f_zero(0.0)}, tight);
  if (ep.traj.stop != StopReason::event)
    throw ClassificationError("solve_one_phase_even: no zero reached");
  ep.t_zero = ep.traj.stop_event->t;
  ep.slope_at_zero = ep.traj.stop_event->yp;
  ep.scale = 1.0 / (std::sqrt(1.0 - ep.t_zero * ep.t_zero) *
                    std::fabs(ep.slope_at_zero));
  return ep;
}

/// Type (ii) one-phase solution: a two-zero lambda = 0 profile with equal
/// endpoint gradients, scaled so both equal one.
inline ConeProfile solve_one_phase_annular(int n, int k, Tolerances tol = {}) {
  const ConeParams p = make_params(n, k, 0.0);
  const double sa = p.sqrt_alpha();
  auto rec_of = [&](double t1) { return residual(p, t1, 1.0, tol); };
  auto rpos = [&](double t1) {
    const ResidualRecord r = rec_of(t1);
    return std::isfinite(r.R) && r.R > 0;
  };
  detail::ScanResult sc;
  double scan_lo = 1e-3 * sa;
  for (int widen = 0; widen < 3 && sc.bracket_count == 0; ++widen) {
    sc = detail::scan_sign_change(
        rpos, detail::log_grid(scan_lo, sa * (1 - 1e-4), 200));
    scan_lo *= 1e-2;
  }
  if (sc.bracket_count == 0)
    throw BracketError("solve_one_phase_annular: no residual sign change");
  const double t1m = detail::bisect_predicate(rpos, sc.lo, sc.hi, 1e-12);

  const ShotOutcome out = second_zero(ShotSpec{p, t1m, 0.0, Slope::of(1.0)},
                                      tol);
  if (!out.reached_zero())
    throw ClassificationError("solve_one_phase_annular: matched shot lost");
  ConeProfile prof;
  prof.params = p;
  prof.family = FamilyTag::one_phase_ii;
  prof.t1 = t1m;
  prof.t2 = *out.t2;
  prof.bracket_count = sc.bracket_count;
  const double g1 = std::sqrt(1.0 - t1m * t1m);  // unit launch slope
  prof.scale = 1.0 / g1;
  prof.slope1 = Slope::of(1.0 * prof.scale);
  prof.slope2 = Slope::of(out.slope2->value * prof.scale);
  prof.theta = contact_angle(prof.t1, prof.slope1);
  detail::append_shot_segments(prof, out);
  prof.t_critical = detail::find_critical(prof);
  prof.f_at_sqrt_alpha = prof.eval(sa).f;
  return prof;
}

/// Measured barrier of the linear regime: unit-slope lambda = 0 shots from
/// t1 <= t_hat return to zero, from t1 > t_hat stay positive.
inline double linear_barrier(int n, int k, Tolerances tol = {}) {
  const ConeParams p = make_params(n, k, 0.0);
  const double sa = p.sqrt_alpha();
  auto returns = [&](double t1) {
    return second_zero(ShotSpec{p, t1, 0.0, Slope::of(1.0)}, tol)
        .reached_zero();
  };
  if (!returns(1e-3 * sa))
    throw BracketError("linear_barrier: small t1 does not return");
  if (returns(sa * (1 - 1e-9)))
    throw BracketError("linear_barrier: no barrier below sqrt(alpha)");
  return detail::bisect_predicate(returns, 1e-3 * sa, sa * (1 - 1e-9), 1e-9);
}

/// Shallow-angle limit report: sup distance between (1/tan theta) f_theta
/// and the lambda = 0 limit profile on the common positive phase.
struct ShallowAngleReport {
  std::vector<double> thetas;
  std::vector<double> distances;
  bool strictly_decreasing = true;
};

inline ShallowAngleReport shallow_angle_limit(int n, int k,
                                              std::vector<double> thetas,
                                              Tolerances tol = {}) {
  // the gradient-normalized lambda = 0 limit profile
  double lt1 = 0, lt2 = 0;
  std::function<double(double)> limit_f;
  if (n == 2 * k) {
    const double g = f0_gradient(k);
    lt2 = f0_zero(k);
    lt1 = std::sqrt(1.0 - lt2 * lt2);
    limit_f = [k, g](double t) { return f0_symmetric(k, t) / g; };
  } else {
    auto prof = std::make_shared<ConeProfile>(solve_one_phase_annular(n, k,
                                                                      tol));
    lt1 = prof->t1;
    lt2 = prof->t2;
    limit_f = [prof](double t) { return prof->eval(t).f; };
  }

  ShallowAngleReport rep;
  double prev = std::numeric_limits<double>::infinity();
  for (const double th : thetas) {
    const ConeProfile prof = solve_capillary_cone(n, k, th, tol);
    const double a = std::max(prof.t1, lt1) + 1e-9;
    const double b = std::min(prof.t2, lt2) - 1e-9;
    double dist = 0;
    const int m = 400;
    for (int i = 0; i <= m; ++i) {
      const double t = a + (b - a) * i / double(m);
      dist = std::max(dist, std::fabs(prof.eval(t).f / std::tan(th) -
                                      limit_f(t)));
    }
    if (!(dist < prev)) rep.strictly_decreasing = false;
    prev = dist;
    rep.thetas.push_back(th);
    rep.distances.push_back(dist);
  }
  return rep;
}

/// Involution image of a profile: the (n, n-k) profile under
/// t <-> sqrt(1-t^2).  Evaluation delegates through the source segments,
/// so involute(involute(p)) reproduces p exactly.
inline ConeProfile involute(const ConeProfile& src) {
  ConeProfile out = src;
  out.params = src.params.swapped();
  out.involuted = !src.involuted;
  out.t1 = std::sqrt(1.0 - src.t2 * src.t2);
  out.t2 = std::sqrt(1.0 - src.t1 * src.t1);
  auto mirror_slope = [](const Slope& s, double t_src, double t_new) {
    if (!s.finite) return Slope::infinite();
    return Slope::of(-(t_src / t_new) * s.value);
  };
  out.slope1 = mirror_slope(src.slope2, src.t2, out.t1);
  out.slope2 = mirror_slope(src.slope1, src.t1, out.t2);
  out.t_critical = std::sqrt(1.0 - src.t_critical * src.t_critical);
  out.f_at_sqrt_alpha = src.eval(src.params.sqrt_alpha()).f;
  return out;
}

}  // namespace capcone
