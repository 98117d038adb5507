#pragma once

/// @file integrate.hpp
/// Event-driven adaptive integration of the f-form and u-form equations,
/// plus the shot runner used by every solver: launch (finite slope or
/// series handoff), descend, and classify the landing as a regular zero,
/// a vertical landing, or no return (pole / fold).
///
/// Landings are delicate: near f = 0 a descending trajectory obeys the
/// leading-order balance f'' ~ kappa f'^3 with kappa = (n-2) L A(t), whose
/// phase-plane invariant
///
///     Q = 1/|f'| - kappa f
///
/// is exactly zero on the vertical-landing separatrix, 1/M for a
/// transversal crossing of slope M, and negative for a fold (f' -> -inf at
/// positive f).  The u = f^2 form integrates stably down to a small
/// positive level, where Q decides the classification; moderate crossings
/// are finished exactly in f-form.

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "capcone/core.hpp"
#include "capcone/detail/dopri5.hpp"
#include "capcone/series.hpp"

namespace capcone {

using detail::Tolerances;

enum class Form { f_form, u_form };

enum class EventKind {
  f_zero_descending,  ///< y crosses `threshold` downward (default level 0)
  f_zero_ascending,   ///< y crosses `threshold` upward
  fp_zero,            ///< y' crosses zero (either direction)
  blowup_f,           ///< |y| exceeds `threshold`
  blowup_fp,          ///< |y'| exceeds `threshold`
  u_zero,             ///< u crosses zero downward (u-form)
  reach_t             ///< t reaches `threshold`
};

struct EventSpec {
  EventKind kind;
  double threshold = 0.0;
  bool terminal = true;
};

inline EventSpec ev_f_zero(double level = 0.0, bool terminal = true) {
  return {EventKind::f_zero_descending, level, terminal};
}
inline EventSpec ev_blowup_f(double thr = 1e6) {
  return {EventKind::blowup_f, thr, true};
}
inline EventSpec ev_blowup_fp(double thr = 1e6) {
  return {EventKind::blowup_fp, thr, true};
}
inline EventSpec ev_reach(double t_target, bool terminal = true) {
  return {EventKind::reach_t, t_target, terminal};
}
inline EventSpec ev_fp_zero(bool terminal = false) {
  return {EventKind::fp_zero, 0.0, terminal};
}

enum class StopReason { event, blowup, reached_end, step_underflow };

struct TrajectoryEvent {
  EventKind kind;
  double t = 0;
  double y = 0;
  double yp = 0;
};

/// Dense numerical solution of one integration leg.  `y` is f in f-form
/// and u in u-form.
struct Trajectory {
  ConeParams params;
  Form form = Form::f_form;
  int direction = +1;
  detail::GenericResult raw;
  std::vector<EventSpec> specs;
  StopReason stop = StopReason::reached_end;
  std::optional<TrajectoryEvent> stop_event;

  double t_start = 0, t_end = 0;
  PhasePoint state_at(double t) const {
    const auto y = raw.at(t);
    return PhasePoint{t, y[0], y[1]};
  }
  PhasePoint end_state() const {
    return PhasePoint{t_end, raw.y_end[0], raw.y_end[1]};
  }
  std::size_t node_count() const { return raw.steps.size() + 1; }
  PhasePoint node(std::size_t i) const {
    if (i < raw.steps.size()) {
      const auto& s = raw.steps[i];
      return PhasePoint{s.t0, s.y0[0], s.y0[1]};
    }
    return end_state();
  }
  std::vector<TrajectoryEvent> events() const {
    std::vector<TrajectoryEvent> v;
    v.reserve(raw.events.size());
    for (const auto& e : raw.events)
      v.push_back({specs[std::size_t(e.id)].kind, e.t, e.y[0], e.y[1]});
    return v;
  }
};

namespace detail {

inline double rhs_u_raw(const ConeParams& p, double t, double u, double up) {
  const double lam = p.lambda;
  const double a = t - p.alpha() / t;
  const double omt2 = 1.0 - t * t;
  const double bracket =
      1.0 + (p.n - 2) * lam * a * up / (2.0 * (1.0 + lam * u));
  double acc = -(2.0 * u - t * up);
  acc += omt2 * up * up * bracket / (2.0 * u);
  acc -= (p.n - 2) *
         (2.0 * u - a * up + omt2 * lam * up * up / (2.0 * (1.0 + lam * u)));
  return acc / omt2;
}

inline std::vector<GenericEvent> to_generic(const std::vector<EventSpec>& ev) {
  std::vector<GenericEvent> out;
  out.reserve(ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const EventSpec s = ev[i];
    GenericEvent g;
    g.id = int(i);
    g.terminal = s.terminal;
    switch (s.kind) {
      case EventKind::f_zero_descending:
      case EventKind::u_zero:
        g.direction = -1;
        g.g = [lvl = s.threshold](double, const State& y) {
          return y[0] - lvl;
        };
        break;
      case EventKind::f_zero_ascending:
        g.direction = +1;
        g.g = [lvl = s.threshold](double, const State& y) {
          return y[0] - lvl;
        };
        break;
      case EventKind::fp_zero:
        g.direction = 0;
        g.g = [](double, const State& y) { return y[1]; };
        break;
      case EventKind::blowup_f:
        g.direction = +1;
        g.g = [thr = s.threshold](double, const State& y) {
          return std::fabs(y[0]) - thr;
        };
        break;
      case EventKind::blowup_fp:
        g.direction = +1;
        g.g = [thr = s.threshold](double, const State& y) {
          return std::fabs(y[1]) - thr;
        };
        break;
      case EventKind::reach_t:
        g.direction = 0;
        g.g = [tt = s.threshold](double t, const State&) { return t - tt; };
        break;
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace detail

/// Adaptive integration with dense output.  Halts at the first terminal
/// event, at a blow-up event, or within `domain_margin` of t = 0 or t = 1.
/// A step-size underflow throws StepUnderflowError unless `underflow_stop`
/// is set, in which case the partial trajectory is returned with
/// StopReason::step_underflow.
inline Trajectory integrate(const ConeParams& params, Form form,
                            PhasePoint init, int direction,
                            const std::vector<EventSpec>& events,
                            Tolerances tol = {}, bool underflow_stop = false) {
  detail::require_interior(init.t, "integrate");
  if (!(direction == 1 || direction == -1))
    throw std::invalid_argument("integrate: direction must be +1 or -1");
  if (form == Form::u_form && !(params.lambda > 0))
    throw std::invalid_argument("integrate: u-form needs lambda > 0");

  const double t_guard =
      direction > 0 ? 1.0 - domain_margin : domain_margin;

  Trajectory traj;
  traj.params = params;
  traj.form = form;
  traj.direction = direction;
  traj.specs = events;
  traj.t_start = init.t;

  auto gen = detail::to_generic(events);
  detail::State y0{init.f, init.fp};
  if (form == Form::f_form) {
    traj.raw = detail::integrate_dopri5(
        [&params](double t, double y, double yp) {
          return rhs_capillary(params, PhasePoint{t, y, yp});
        },
        init.t, y0, t_guard, gen, tol, !underflow_stop);
  } else {
    traj.raw = detail::integrate_dopri5(
        [&params](double t, double y, double yp) {
          return detail::rhs_u_raw(params, t, y, yp);
        },
        init.t, y0, t_guard, gen, tol, !underflow_stop);
  }

  if (traj.raw.stop == detail::StopKind::underflow) {
    traj.stop = StopReason::step_underflow;
    traj.t_end = traj.raw.t_end;
    return traj;
  }

  traj.t_end = traj.raw.t_end;
  if (traj.raw.stop == detail::StopKind::event) {
    const auto& fe = *traj.raw.stop_event;
    const EventKind kind = events[std::size_t(fe.id)].kind;
    traj.stop_event = TrajectoryEvent{kind, fe.t, fe.y[0], fe.y[1]};
    traj.stop = (kind == EventKind::blowup_f || kind == EventKind::blowup_fp)
                    ? StopReason::blowup
                    : StopReason::event;
  } else {
    traj.stop = StopReason::reached_end;
  }
  return traj;
}

/// Initial data for a shot: start at t1 with value c0 and the given slope.
struct ShotSpec {
  ConeParams params;
  double t1 = 0;
  double c0 = 0;
  Slope slope = Slope::of(1.0);
};

/// Everything a shot produced: the landing (if any), its classification,
/// and the dense legs for later inspection.
struct ShotOutcome {
  enum class Kind {
    second_zero,        ///< f returned to zero at t2
    no_zero_blowup,     ///< pole or fold while f > 0
    no_zero_domain_end  ///< reached the domain guard while f > 0
  };
  Kind kind = Kind::no_zero_domain_end;
  std::optional<double> t2;
  std::optional<Slope> slope2;
  bool vertical = false;
  std::vector<Trajectory> pieces;
  std::optional<SeriesExpansion> launch;

  bool reached_zero() const { return kind == Kind::second_zero; }
};

namespace detail {

/// Shot configuration knobs (values fixed by design, overridable in tests).
struct ShotConfig {
  double blowup = 1e6;          ///< |f| or |f'| beyond this is a blow-up
  double switch_floor = 1e-3;   ///< f below this may switch to u-form
  double switch_slope = 100.0;  ///< |f'| beyond this (descending) switches
  double launch_offset = 1e-5;  ///< series handoff distance in t
  double u_stop = 1e-8;         ///< u-form classification level
  int series_order = 8;
};

/// Magnitude of the cubic-balance coefficient kappa = (n-2) L |A| near a
/// zero of f.
inline double landing_kappa(const ConeParams& p, double t) {
  return (p.n - 2) * p.lambda * std::fabs(coeff_A(p, t));
}

enum class DeepKind { crossing_moderate, crossing_steep, vertical, fold };

struct DeepClass {
  DeepKind kind;
  double t2 = 0;     ///< zero location (steep crossing / vertical)
  double slope = 0;  ///< t-sense slope at the zero (steep crossing)
};

/// Classifies a deep descending state (f small, slope steep) by the
/// Bernoulli invariant Q = 1/|f'| - kappa f.
inline DeepClass classify_deep(const ConeParams& p, int dir, double t,
                               double f, double v) {
  const double kappa = landing_kappa(p, t);
  const double q = 1.0 / std::fabs(v) - kappa * f;
  const double q_vertical = 1e-4 * kappa * f;
  if (q > 1e-4) return {DeepKind::crossing_moderate};
  if (q > q_vertical) {
    // transversal crossing of slope 1/q at distance q f + kappa f^2/2
    return {DeepKind::crossing_steep,
            t + dir * (q * f + 0.5 * kappa * f * f),
            (v > 0 ? 1.0 : -1.0) / q};
  }
  if (q > -q_vertical)
    return {DeepKind::vertical, t + dir * 0.5 * kappa * f * f};
  return {DeepKind::fold};
}

}  // namespace detail

/// Classifies the landing recorded in a terminated shot leg: a bounded
/// transversal zero, or (through the u-form) a vertical landing.  Empty if
/// the leg did not land (blow-up, fold, domain end).
inline std::optional<std::pair<double, bool>> landing_detect(
    const ConeParams& params, const Trajectory& traj) {
  if (traj.stop == StopReason::blowup ||
      traj.stop == StopReason::reached_end)
    return std::nullopt;
  if (!traj.stop_event) return std::nullopt;
  const auto& e = *traj.stop_event;
  if (traj.form == Form::f_form && e.kind == EventKind::f_zero_descending)
    return std::make_pair(e.t, false);
  if (traj.form == Form::u_form &&
      (e.kind == EventKind::u_zero || e.kind == EventKind::f_zero_descending)) {
    const double f = std::sqrt(std::max(e.y, 0.0));
    if (f <= 0.0) {
      // hit u = 0 head on; compare the contact slope with the regular value
      const double ur = regular_u_slope(params, e.t);
      if (std::fabs(e.yp - ur) <= 1e-4 * std::fabs(ur))
        return std::make_pair(e.t, true);
      return std::nullopt;
    }
    const auto dc = detail::classify_deep(params, traj.direction, e.t, f,
                                          e.yp / (2.0 * f));
    if (dc.kind == detail::DeepKind::vertical)
      return std::make_pair(dc.t2, true);
    if (dc.kind == detail::DeepKind::crossing_steep)
      return std::make_pair(dc.t2, false);
    return std::nullopt;
  }
  return std::nullopt;
}

/// Runs a full shot from an interior state: integrates forward (or
/// backward), switching to the u-form near steep descending zero
/// approaches, and classifies the outcome.
inline ShotOutcome run_shot(const ConeParams& params, PhasePoint start,
                            int direction, Tolerances tol = {},
                            detail::ShotConfig cfg = {}) {
  ShotOutcome out;
  PhasePoint state = start;
  double floor = cfg.switch_floor;

  auto fold_at_underflow = [&](const Trajectory& tr) -> bool {
    // step-size collapse with f positive and the slope running away is the
    // equation's vertical-tangent ending (a fold of the graph); genuine
    // second zeros are classified through the floor / u-form path first
    const PhasePoint s = tr.end_state();
    double f = s.f, v = s.fp;
    if (tr.form == Form::u_form) {
      if (s.f <= 0) return false;
      f = std::sqrt(s.f);
      v = s.fp / (2.0 * f);
    }
    return f > 0 && std::fabs(v) >= 1e4;
  };

  for (int leg = 0; leg < 64; ++leg) {
    std::vector<EventSpec> events{ev_f_zero(0.0), ev_blowup_f(cfg.blowup),
                                  ev_blowup_fp(cfg.blowup)};
    const bool with_floor = params.lambda > 0 && floor > 1e-13;
    if (with_floor) events.push_back(ev_f_zero(floor));

    Trajectory traj = integrate(params, Form::f_form, state, direction,
                                events, tol, /*underflow_stop=*/true);
    out.pieces.push_back(traj);
    const Trajectory& fm = out.pieces.back();

    if (fm.stop == StopReason::step_underflow) {
      if (fold_at_underflow(fm)) {
        out.kind = ShotOutcome::Kind::no_zero_blowup;
        return out;
      }
      throw StepUnderflowError("run_shot: step underflow before landing "
                               "classification",
                               fm.t_end);
    }
    if (fm.stop == StopReason::reached_end) {
      out.kind = ShotOutcome::Kind::no_zero_domain_end;
      return out;
    }
    if (fm.stop == StopReason::blowup) {
      // |f| -> inf poles and folds (f' -> -inf at positive f) both end the
      // graphical solution without a second zero
      out.kind = ShotOutcome::Kind::no_zero_blowup;
      return out;
    }

    const auto& e = *fm.stop_event;
    const int fired_id = fm.raw.stop_event->id;
    if (with_floor && fired_id == 3) {
      const double along = direction * e.yp;
      if (along >= -cfg.switch_slope) {
        // slope still moderate: lower the floor and carry on in f-form
        state = PhasePoint{e.t, e.y, e.yp};
        floor /= 10.0;
        continue;
      }
      // steep descent through the floor; fold shortcut if already deep in
      // the fold basin, otherwise regularize through the u-form
      const double kappa = detail::landing_kappa(params, e.t);
      if (1.0 / std::fabs(e.yp) < kappa * e.y - 2e-3) {
        out.kind = ShotOutcome::Kind::no_zero_blowup;
        return out;
      }
      const double u_entry = e.y * e.y;
      const double up_entry = 2.0 * e.y * e.yp;
      const double ur_scale =
          2.0 / ((params.n - 2) * params.lambda *
                 std::fabs(coeff_A(params, e.t)));
      Trajectory ut = integrate(
          params, Form::u_form, PhasePoint{e.t, u_entry, up_entry}, direction,
          {EventSpec{EventKind::u_zero, cfg.u_stop, true}, ev_fp_zero(true),
           ev_blowup_f(cfg.blowup),
           ev_blowup_fp(std::max(50.0 * ur_scale, 3.0 * std::fabs(up_entry)))},
          tol, /*underflow_stop=*/true);
      out.pieces.push_back(ut);
      const Trajectory& um = out.pieces.back();

      if (um.stop == StopReason::step_underflow) {
        if (fold_at_underflow(um)) {
          out.kind = ShotOutcome::Kind::no_zero_blowup;
          return out;
        }
        throw StepUnderflowError("run_shot: u-form step underflow before "
                                 "landing classification",
                                 um.t_end);
      }
      if (um.stop == StopReason::blowup) {
        out.kind = ShotOutcome::Kind::no_zero_blowup;  // fold
        return out;
      }
      if (um.stop != StopReason::event || !um.stop_event)
        throw ClassificationError(
            "run_shot: u-form leg ended without landing classification");

      const auto& ue = *um.stop_event;
      if (ue.kind == EventKind::fp_zero) {
        // u has a positive minimum: f stays positive; resume the shot
        const double fmin = std::sqrt(std::max(ue.y, 0.0));
        state = PhasePoint{ue.t, fmin, 0.0};
        floor = std::min(floor, std::max(fmin / 2.0, 1e-12));
        continue;
      }
      // u came down to the classification level
      const double fu = std::sqrt(ue.y);
      const auto dc = detail::classify_deep(params, direction, ue.t, fu,
                                            ue.yp / (2.0 * fu));
      switch (dc.kind) {
        case detail::DeepKind::crossing_moderate:
          state = PhasePoint{ue.t, fu, ue.yp / (2.0 * fu)};
          floor = 0.0;  // finish in pure f-form
          continue;
        case detail::DeepKind::crossing_steep:
          out.kind = ShotOutcome::Kind::second_zero;
          out.t2 = dc.t2;
          out.slope2 = Slope::of(dc.slope);
          out.vertical = false;
          return out;
        case detail::DeepKind::vertical:
          out.kind = ShotOutcome::Kind::second_zero;
          out.t2 = dc.t2;
          out.slope2 = Slope::infinite();
          out.vertical = true;
          return out;
        case detail::DeepKind::fold:
          out.kind = ShotOutcome::Kind::no_zero_blowup;
          return out;
      }
    }

    // genuine zero crossing with bounded slope
    out.kind = ShotOutcome::Kind::second_zero;
    out.t2 = e.t;
    out.slope2 = Slope::of(e.yp);
    out.vertical = false;
    return out;
  }
  throw CapconeError("run_shot: leg limit exceeded");
}

/// Launches a vertical shot (infinite slope) from an anchor through the
/// square-root series and runs it to classification.  The branch side is
/// forced by the sign of A: forward for anchors below sqrt(alpha),
/// backward for anchors above.
inline ShotOutcome vertical_shot(const ConeParams& p, double anchor,
                                 double c0 = 0.0, Tolerances tol = {},
                                 detail::ShotConfig cfg = {}) {
  SeriesExpansion e = build_series(p, anchor, c0, cfg.series_order);
  const double t_hand = anchor + e.sign * cfg.launch_offset;
  ShotOutcome out = run_shot(p, eval_series(e, t_hand), e.sign, tol, cfg);
  out.launch = std::move(e);
  return out;
}

/// Launches a shot from a zero: directly for finite slopes, through the
/// square-root series for vertical ones, then runs it to classification.
/// For a vertical launch the branch requires A(t1) < 0 (t1 < sqrt(alpha));
/// from t1 >= sqrt(alpha) the M -> infinity limit is strictly increasing
/// and never returns, which is reported without integrating.
inline ShotOutcome second_zero(const ShotSpec& shot, Tolerances tol = {},
                               detail::ShotConfig cfg = {}) {
  const ConeParams& p = shot.params;
  if (!shot.slope.finite) {
    if (p.lambda == 0.0) {
      // scale invariance: the lambda = 0 vertical shot has the zeros of the
      // unit-slope shot
      return second_zero(
          ShotSpec{p, shot.t1, shot.c0, Slope::of(1.0)}, tol, cfg);
    }
    if (shot.t1 >= p.sqrt_alpha() - 1e-12) {
      ShotOutcome out;
      out.kind = ShotOutcome::Kind::no_zero_domain_end;
      return out;
    }
    return vertical_shot(p, shot.t1, shot.c0, tol, cfg);
  }
  if (!(shot.slope.value > 0))
    throw std::invalid_argument("second_zero: slope must be positive");
  return run_shot(p, PhasePoint{shot.t1, shot.c0, shot.slope.value}, +1, tol,
                  cfg);
}

/// Rescales a trajectory: f -> f / sqrt(factor) solves the equation with
/// parameter lambda * factor.  Zeros are unchanged, slopes scale.
inline Trajectory rescale_lambda(const Trajectory& traj, double factor) {
  if (!(factor > 0))
    throw std::invalid_argument("rescale_lambda: factor must be positive");
  if (traj.form != Form::f_form)
    throw std::invalid_argument("rescale_lambda: f-form trajectories only");
  Trajectory out = traj;
  out.params.lambda = traj.params.lambda * factor;
  const double s = 1.0 / std::sqrt(factor);
  for (auto& st : out.raw.steps) {
    for (int i = 0; i < 2; ++i) {
      st.y0[i] *= s;
      st.y1[i] *= s;
      for (auto& k : st.k) k[i] *= s;
    }
  }
  for (auto& e : out.raw.events)
    for (int i = 0; i < 2; ++i) e.y[i] *= s;
  for (int i = 0; i < 2; ++i) out.raw.y_end[i] *= s;
  if (out.stop_event) {
    out.stop_event->y *= s;
    out.stop_event->yp *= s;
  }
  return out;
}

}  // namespace capcone
