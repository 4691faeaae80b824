#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ltviqc/core.hpp"
#include "ltviqc/dense_trajectory.hpp"

namespace ltviqc {

template <typename Scalar>
struct OdeOptions {
  Scalar rtol = Scalar(1e-8);
  Scalar atol = Scalar(1e-10);
  /// Smallest admissible error-controlled step, relative to |t1 - t0|.
  Scalar min_step_fraction = Scalar(1e-12);
  long max_steps = 5'000'000;
};

enum class OdeStatus {
  Completed,
  Stopped,        // observer requested termination
  StepUnderflow,  // error control drove the step below the minimum
  MaxSteps,
};

template <typename Scalar>
struct OdeResult {
  OdeStatus status = OdeStatus::Completed;
  Scalar t_end = Scalar(0);
  long accepted_steps = 0;
  long rejected_steps = 0;
  DenseTrajectory<Scalar> trajectory;
};

namespace detail {

template <typename Scalar>
struct DormandPrince {
  static constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5,
                          c5 = Scalar(8) / 9;
  static constexpr Scalar a21 = Scalar(1) / 5;
  static constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
  static constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
  static constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                          a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
  static constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33,
                          a63 = Scalar(46732) / 5247, a64 = Scalar(49) / 176,
                          a65 = Scalar(-5103) / 18656;
  static constexpr Scalar b1 = Scalar(35) / 384, b3 = Scalar(500) / 1113, b4 = Scalar(125) / 192,
                          b5 = Scalar(-2187) / 6784, b6 = Scalar(11) / 84;
  static constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695,
                          e4 = Scalar(71) / 1920, e5 = Scalar(-17253) / 339200,
                          e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;
};

template <typename Scalar>
Scalar scaled_rms(const Vector<Scalar>& v, const Vector<Scalar>& y0, const Vector<Scalar>& y1,
                  const OdeOptions<Scalar>& opts) {
  if (v.size() == 0) return Scalar(0);
  const auto scale =
      (opts.atol + opts.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
  return std::sqrt((v.array() / scale.array()).square().mean());
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration from t0 to t1 (either direction).
///
/// `rhs(t, y, dy)` writes dy/dt. Steps never straddle a breakpoint: each
/// breakpoint strictly between t0 and t1 is landed on exactly, so a
/// right-hand side that is only piecewise smooth between breakpoints keeps
/// full order. After every accepted step `observer(t, y, dy)` is called and
/// may return false to stop. Every accepted point (including t0) is recorded
/// in the returned trajectory.
template <typename Scalar, typename Rhs, typename Observer>
OdeResult<Scalar> integrate_dopri5(Rhs&& rhs, Scalar t0, Scalar t1, const Vector<Scalar>& y0,
                                   const OdeOptions<Scalar>& opts,
                                   std::span<const Scalar> breakpoints, Observer&& observer) {
  using V = Vector<Scalar>;
  using RK = detail::DormandPrince<Scalar>;
  OdeResult<Scalar> result;
  const Scalar span = std::abs(t1 - t0);
  const Scalar dir = t1 >= t0 ? Scalar(1) : Scalar(-1);
  const Scalar h_min = opts.min_step_fraction * span;
  const Scalar snap = Scalar(1e-13) * std::max(span, Scalar(1));

  std::vector<Scalar> stops;
  for (Scalar b : breakpoints) {
    if (dir * (b - t0) > snap && dir * (t1 - b) > snap) stops.push_back(b);
  }
  std::sort(stops.begin(), stops.end(), [dir](Scalar a, Scalar b) { return dir * a < dir * b; });
  stops.push_back(t1);
  std::size_t next_stop = 0;

  const Eigen::Index n = y0.size();
  V y = y0, f(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  Scalar t = t0;
  rhs(t, y, f);
  result.trajectory.push_back(t, y, f);
  result.t_end = t;
  if (span == Scalar(0)) return result;
  if (!observer(t, y, f)) {
    result.status = OdeStatus::Stopped;
    return result;
  }

  // Initial step (Hairer, Norsett & Wanner, II.4).
  Scalar h;
  {
    const Scalar d0 = detail::scaled_rms(y, y, y, opts);
    const Scalar d1 = detail::scaled_rms(f, y, y, opts);
    Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6) * span
                                                         : Scalar(0.01) * d0 / d1;
    h0 = std::min(h0, span);
    ytmp = y + dir * h0 * f;
    rhs(t + dir * h0, ytmp, k2);
    const Scalar d2 = detail::scaled_rms(V(k2 - f), y, y, opts) / h0;
    const Scalar dmax = std::max(d1, d2);
    const Scalar h1 = dmax <= Scalar(1e-15) ? std::max(Scalar(1e-6) * span, h0 * Scalar(1e-3))
                                            : std::pow(Scalar(0.01) / dmax, Scalar(0.2));
    h = std::min(Scalar(100) * h0, h1);
    if (!std::isfinite(static_cast<double>(h)) || h <= Scalar(0)) h = Scalar(1e-6) * span;
    // The estimate only seeds the controller; states starting at zero with a
    // steep derivative can drive it below the floor.
    h = std::max(h, Scalar(100) * h_min);
  }

  bool last_rejected = false;
  while (true) {
    if (result.accepted_steps + result.rejected_steps >= opts.max_steps) {
      result.status = OdeStatus::MaxSteps;
      break;
    }
    if (h < h_min) {
      result.status = OdeStatus::StepUnderflow;
      break;
    }
    const Scalar target = stops[next_stop];
    const Scalar remaining = dir * (target - t);
    const bool lands = h >= remaining;
    const Scalar hs = dir * (lands ? remaining : h);

    ytmp = y + hs * RK::a21 * f;
    rhs(t + RK::c2 * hs, ytmp, k2);
    ytmp = y + hs * (RK::a31 * f + RK::a32 * k2);
    rhs(t + RK::c3 * hs, ytmp, k3);
    ytmp = y + hs * (RK::a41 * f + RK::a42 * k2 + RK::a43 * k3);
    rhs(t + RK::c4 * hs, ytmp, k4);
    ytmp = y + hs * (RK::a51 * f + RK::a52 * k2 + RK::a53 * k3 + RK::a54 * k4);
    rhs(t + RK::c5 * hs, ytmp, k5);
    ytmp = y + hs * (RK::a61 * f + RK::a62 * k2 + RK::a63 * k3 + RK::a64 * k4 + RK::a65 * k5);
    rhs(t + hs, ytmp, k6);
    ynew = y + hs * (RK::b1 * f + RK::b3 * k3 + RK::b4 * k4 + RK::b5 * k5 + RK::b6 * k6);
    const Scalar t_new = lands ? target : t + hs;
    rhs(t_new, ynew, k7);
    err = hs * (RK::e1 * f + RK::e3 * k3 + RK::e4 * k4 + RK::e5 * k5 + RK::e6 * k6 + RK::e7 * k7);

    Scalar err_norm = detail::scaled_rms(err, y, ynew, opts);
    const bool finite = ynew.allFinite() && k7.allFinite() && std::isfinite(static_cast<double>(err_norm));
    if (!finite) {
      ++result.rejected_steps;
      h = std::abs(hs) * Scalar(0.25);
      last_rejected = true;
      continue;
    }

    if (err_norm <= Scalar(1)) {
      ++result.accepted_steps;
      t = t_new;
      y.swap(ynew);
      f.swap(k7);
      result.trajectory.push_back(t, y, f);
      result.t_end = t;
      const bool keep_going = observer(t, y, f);
      if (lands) ++next_stop;
      if (!keep_going) {
        result.status = OdeStatus::Stopped;
        break;
      }
      if (lands && next_stop == stops.size()) {
        result.status = OdeStatus::Completed;
        break;
      }
      Scalar factor = err_norm == Scalar(0)
                          ? Scalar(5)
                          : std::clamp(Scalar(0.9) * std::pow(err_norm, Scalar(-0.2)),
                                       Scalar(0.2), Scalar(5));
      if (last_rejected) factor = std::min(factor, Scalar(1));
      // A step shortened to land on a breakpoint says nothing about the
      // controller's step, so that step is kept as is.
      if (!(lands && std::abs(hs) < h)) h = std::abs(hs) * factor;
      last_rejected = false;
    } else {
      ++result.rejected_steps;
      const Scalar factor =
          std::max(Scalar(0.2), Scalar(0.9) * std::pow(err_norm, Scalar(-0.2)));
      h = std::abs(hs) * factor;
      last_rejected = true;
    }
  }

  if (dir < 0) result.trajectory.make_ascending();
  return result;
}

template <typename Scalar, typename Rhs>
OdeResult<Scalar> integrate_dopri5(Rhs&& rhs, Scalar t0, Scalar t1, const Vector<Scalar>& y0,
                                   const OdeOptions<Scalar>& opts,
                                   std::span<const Scalar> breakpoints = {}) {
  return integrate_dopri5(std::forward<Rhs>(rhs), t0, t1, y0, opts, breakpoints,
                          [](Scalar, const Vector<Scalar>&, const Vector<Scalar>&) { return true; });
}

}  // namespace ltviqc
