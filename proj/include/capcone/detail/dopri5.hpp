#pragma once

/// @file dopri5.hpp
/// Dormand-Prince 5(4) embedded pair for the second-order scalar equation
/// y'' = accel(t, y, y'), with PI step-size control, fourth-order dense
/// output and event localization on the dense interpolant.
///
/// The state is (y, y').  Events are scalar functions g(t, y, y') whose
/// directed sign changes are refined to 1e-12 in t by bisection.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "capcone/core.hpp"

namespace capcone::detail {

using State = std::array<double, 2>;

struct Tolerances {
  double abs = 1e-11;
  double rel = 1e-11;
};

/// One accepted step with everything the dense interpolant needs.
struct StepRecord {
  double t0 = 0;
  double h = 0;
  State y0{};
  State y1{};
  std::array<State, 7> k{};

  /// Continuous extension (order 4), theta in [0,1].
  State dense(double theta) const {
    State out;
    const double th1 = 1.0 - theta;
    for (int i = 0; i < 2; ++i) {
      const double ydiff = y1[i] - y0[i];
      const double bspl = h * k[0][i] - ydiff;
      const double c4 = ydiff - h * k[6][i] - bspl;
      const double c5 =
          h * (d1 * k[0][i] + d3 * k[2][i] + d4 * k[3][i] + d5 * k[4][i] +
               d6 * k[5][i] + d7 * k[6][i]);
      out[i] = y0[i] + theta * (ydiff + th1 * (bspl + theta * (c4 + th1 * c5)));
    }
    return out;
  }

  State at(double t) const { return dense((t - t0) / h); }

  static constexpr double d1 = -12715105075.0 / 11282082432.0;
  static constexpr double d3 = 87487479700.0 / 32700410799.0;
  static constexpr double d4 = -10690763975.0 / 1880347072.0;
  static constexpr double d5 = 701980252875.0 / 199316789632.0;
  static constexpr double d6 = -1453857185.0 / 822651844.0;
  static constexpr double d7 = 69997945.0 / 29380423.0;
};

/// A scalar event condition on (t, y, y').  `direction` restricts to sign
/// changes of g along the traversal: +1 ascending, -1 descending, 0 both.
struct GenericEvent {
  std::function<double(double, const State&)> g;
  int direction = 0;
  bool terminal = true;
  int id = 0;
};

struct FiredEvent {
  int id = -1;
  double t = 0;
  State y{};
};

enum class StopKind { event, reached_end, underflow, none };

struct GenericResult {
  std::vector<StepRecord> steps;
  std::vector<FiredEvent> events;  ///< all fired events, in traversal order
  StopKind stop = StopKind::none;
  std::optional<FiredEvent> stop_event;
  double t_end = 0;
  State y_end{};

  State at(double t) const {
    // binary search over monotone step anchors
    const bool fwd = steps.front().h > 0;
    std::size_t lo = 0, hi = steps.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool left = fwd ? (t < steps[mid].t0) : (t > steps[mid].t0);
      (left ? hi : lo) = mid;
    }
    return steps[lo].at(t);
  }
};

/// Integrates y'' = accel(t, y, y') from (t0, y0) toward t_end.
/// Stops at the first terminal event, at t_end, or throws StepUnderflowError.
template <class Accel>
GenericResult integrate_dopri5(Accel&& accel, double t0, State y0, double t_end,
                               const std::vector<GenericEvent>& events,
                               Tolerances tol = {},
                               bool underflow_throws = true,
                               std::uint64_t max_steps = 4'000'000) {
  // Butcher tableau (Dormand & Prince 1980)
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  const int dir = t_end > t0 ? +1 : -1;
  const double span = std::fabs(t_end - t0);

  auto deriv = [&](double t, const State& y) -> State {
    return State{y[1], accel(t, y[0], y[1])};
  };

  GenericResult out;
  out.steps.reserve(256);

  // Hairer-style initial step guess.
  State f0 = deriv(t0, y0);
  double h;
  {
    double d0 = 0, d1n = 0;
    for (int i = 0; i < 2; ++i) {
      const double sc = tol.abs + tol.rel * std::fabs(y0[i]);
      d0 += (y0[i] / sc) * (y0[i] / sc);
      d1n += (f0[i] / sc) * (f0[i] / sc);
    }
    double h0 = (d0 > 1e-10 && d1n > 1e-10)
                    ? 0.01 * std::sqrt(d0 / d1n)
                    : 1e-6;
    h0 = std::min(h0, span);
    State ye;
    for (int i = 0; i < 2; ++i) ye[i] = y0[i] + dir * h0 * f0[i];
    State f1 = deriv(t0 + dir * h0, ye);
    double d2 = 0;
    for (int i = 0; i < 2; ++i) {
      const double sc = tol.abs + tol.rel * std::fabs(y0[i]);
      d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    d2 = std::sqrt(d2) / h0;
    const double d1s = std::sqrt(d1n);
    double h1 = (std::max(d1s, d2) > 1e-15)
                    ? std::pow(0.01 / std::max(d1s, d2), 0.2)
                    : std::max(1e-6, h0 * 1e-3);
    h = dir * std::min({100 * h0, h1, span});
  }

  // event bookkeeping: last observed nonzero sign per event
  std::vector<int> last_sign(events.size(), 0);
  for (std::size_t e = 0; e < events.size(); ++e) {
    const double g = events[e].g(t0, y0);
    last_sign[e] = (g > 0) - (g < 0);
  }

  double t = t0;
  State y = y0;
  double errold = 1e-4;
  bool last = false;

  for (std::uint64_t nstep = 0; nstep < max_steps; ++nstep) {
    if (std::fabs(h) < 1e-15) {
      if (underflow_throws)
        throw StepUnderflowError("integrate_dopri5: step size underflow", t);
      out.stop = StopKind::underflow;
      out.t_end = t;
      out.y_end = y;
      return out;
    }
    if (dir * (t + h - t_end) > 0) {
      h = t_end - t;
      last = true;
    } else {
      last = false;
    }

    StepRecord rec;
    rec.t0 = t;
    rec.h = h;
    rec.y0 = y;
    auto& k = rec.k;
    k[0] = f0;
    State ytmp;
    for (int i = 0; i < 2; ++i) ytmp[i] = y[i] + h * a21 * k[0][i];
    k[1] = deriv(t + c2 * h, ytmp);
    for (int i = 0; i < 2; ++i)
      ytmp[i] = y[i] + h * (a31 * k[0][i] + a32 * k[1][i]);
    k[2] = deriv(t + c3 * h, ytmp);
    for (int i = 0; i < 2; ++i)
      ytmp[i] = y[i] + h * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
    k[3] = deriv(t + c4 * h, ytmp);
    for (int i = 0; i < 2; ++i)
      ytmp[i] = y[i] + h * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] +
                            a54 * k[3][i]);
    k[4] = deriv(t + c5 * h, ytmp);
    for (int i = 0; i < 2; ++i)
      ytmp[i] = y[i] + h * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] +
                            a64 * k[3][i] + a65 * k[4][i]);
    k[5] = deriv(t + h, ytmp);
    State y1;
    for (int i = 0; i < 2; ++i)
      y1[i] = y[i] + h * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] +
                          b5 * k[4][i] + b6 * k[5][i]);
    k[6] = deriv(t + h, y1);
    rec.y1 = y1;

    double err = 0;
    bool finite = true;
    for (int i = 0; i < 2; ++i) {
      if (!std::isfinite(y1[i]) || !std::isfinite(k[6][i])) finite = false;
      const double ee = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] +
                             e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
      const double sc =
          tol.abs + tol.rel * std::max(std::fabs(y[i]), std::fabs(y1[i]));
      err += (ee / sc) * (ee / sc);
    }
    err = std::sqrt(err / 2);

    if (!finite || !(err <= 1.0)) {
      // rejected
      const double fac = finite ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h *= std::min(0.9, fac);
      continue;
    }

    out.steps.push_back(rec);

    // --- event scan on the dense interpolant
    std::optional<FiredEvent> stop_here;
    {
      static constexpr int nscan = 8;
      for (std::size_t e = 0; e < events.size(); ++e) {
        int prev = last_sign[e];
        double th_prev = 0.0;
        for (int j = 1; j <= nscan; ++j) {
          const double th = double(j) / nscan;
          const State ys = rec.dense(th);
          const double g = events[e].g(t + th * h, ys);
          const int sg = (g > 0) - (g < 0);
          if (sg != 0 && prev != 0 && sg != prev) {
            const int change = sg;  // sign after crossing
            const bool want = events[e].direction == 0 ||
                              events[e].direction == change;
            if (want) {
              // bisect g on [th_prev, th]
              double lo = th_prev, hi = th;
              for (int it = 0; it < 60 && (hi - lo) * std::fabs(h) > 1e-13;
                   ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = events[e].g(t + mid * h, rec.dense(mid));
                const int sm = (gm > 0) - (gm < 0);
                if (sm == prev || sm == 0)
                  lo = mid;
                else
                  hi = mid;
              }
              const double thx = 0.5 * (lo + hi);
              FiredEvent fe{events[e].id, t + thx * h, rec.dense(thx)};
              out.events.push_back(fe);
              if (events[e].terminal &&
                  (!stop_here || std::fabs(fe.t - t) <
                                     std::fabs(stop_here->t - t)))
                stop_here = fe;
            }
          }
          if (sg != 0) {
            prev = sg;
            th_prev = th;
          }
        }
        last_sign[e] = prev;
      }
    }

    if (stop_here) {
      out.stop = StopKind::event;
      out.stop_event = stop_here;
      out.t_end = stop_here->t;
      out.y_end = stop_here->y;
      // drop recorded non-terminal events past the stop point
      std::erase_if(out.events, [&](const FiredEvent& fe) {
        return dir * (fe.t - stop_here->t) > 0;
      });
      return out;
    }

    t += h;
    y = y1;
    f0 = k[6];  // FSAL

    if (last) {
      out.stop = StopKind::reached_end;
      out.t_end = t;
      out.y_end = y;
      return out;
    }

    // PI controller (Gustafsson)
    const double safe = 0.9, alpha = 0.7 / 5.0, beta = 0.4 / 5.0;
    const double errc = std::max(err, 1e-10);
    double fac = safe * std::pow(errc, -alpha) * std::pow(errold, beta);
    fac = std::min(5.0, std::max(0.2, fac));
    errold = errc;
    h *= fac;
  }
  throw CapconeError("integrate_dopri5: max step count exceeded");
}

}  // namespace capcone::detail
