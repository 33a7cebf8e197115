// Copyright 2026 The catpump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dormand-Prince 5(4) embedded Runge-Kutta with FSAL and PI step control.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "catpump/error.hpp"

namespace catpump::ode {

struct Options {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0: estimated from the first derivative
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
  /// A step smaller than min_step_factor * |t| (or 1e-300) is an underflow.
  double min_step_factor = 1e-14;
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  double last_step = 0.0;
  double min_step = std::numeric_limits<double>::infinity();
  double max_error_ratio = 0.0;  // largest accepted normalized error estimate
};

/// Integrates dy/dt = f(t, y) from t0 to t1 in place. `rhs(t, y, dydt)`
/// writes the derivative. `observer(t, y)` runs after every accepted step
/// and may return false to stop early. Returns the time reached.
/// Throws StiffnessError on step-size underflow.
template <class Vector, class Rhs, class Observer>
double integrate(Rhs&& rhs, Vector& y, double t0, double t1, const Options& opt, Stats& stats,
                 Observer&& observer, double& step_hint) {
  // Dormand-Prince coefficients.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // error coefficients: b - b*
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = t1 - t0;
  if (span == 0.0) return t0;
  const double dir = span > 0 ? 1.0 : -1.0;

  const auto n = y.size();
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);

  auto error_norm = [&](const Vector& err, const Vector& y0, const Vector& y1) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
      const double r = std::abs(err[i]) / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(n, 1)));
  };

  double t = t0;
  rhs(t, y, k1);
  ++stats.evaluations;

  double h = step_hint > 0.0 ? step_hint : opt.initial_step;
  if (h <= 0.0) {
    // Hairer's starting step heuristic.
    const double d0 = error_norm(y, Vector::Zero(n), y);
    const double d1 = error_norm(k1, Vector::Zero(n), y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * std::abs(span) : 0.01 * d0 / d1;
    h0 = std::min(h0, std::abs(span));
    tmp = y + dir * h0 * k1;
    rhs(t + dir * h0, tmp, k2);
    ++stats.evaluations;
    const double d2 = error_norm(Vector(k2 - k1), Vector::Zero(n), y) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, opt.max_step, std::abs(span)});

  double err_prev = 1e-4;
  bool last_rejected = false;
  while (dir * (t1 - t) > 0.0) {
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      std::ostringstream os;
      os << "integrator exceeded " << opt.max_steps << " steps at t = " << t;
      throw ConvergenceError(os.str());
    }
    const double remaining = std::abs(t1 - t);
    bool clipped = false;
    if (h >= remaining) {
      h = remaining;
      clipped = true;
    }
    const double min_step = std::max(opt.min_step_factor * std::abs(t), 1e-300);
    if (h < min_step) {
      std::ostringstream os;
      os << "step size underflow (h = " << h << ") at t = " << t;
      throw StiffnessError(os.str(), 1.0 / h);
    }
    const double hs = dir * h;

    tmp = y + hs * (a21 * k1);
    rhs(t + c2 * hs, tmp, k2);
    tmp = y + hs * (a31 * k1 + a32 * k2);
    rhs(t + c3 * hs, tmp, k3);
    tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * hs, tmp, k4);
    tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * hs, tmp, k5);
    tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + hs, tmp, k6);
    ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + hs, ynew, k7);
    stats.evaluations += 6;

    tmp = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = error_norm(tmp, y, ynew);

    if (std::isfinite(err) && err <= 1.0) {
      t = clipped ? t1 : t + hs;
      y.swap(ynew);
      k1.swap(k7);
      ++stats.accepted;
      stats.last_step = h;
      stats.min_step = std::min(stats.min_step, h);
      stats.max_error_ratio = std::max(stats.max_error_ratio, err);
      // PI controller (Gustafsson), alpha = 0.7/5, beta = 0.4/5.
      const double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.14) * std::pow(err_prev, 0.08);
      fac = std::clamp(fac, 0.2, 5.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      err_prev = e;
      last_rejected = false;
      if (!clipped) step_hint = std::min(h * fac, opt.max_step);
      h = std::min(h * fac, opt.max_step);
      if (!observer(t, y)) return t;
    } else {
      ++stats.rejected;
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h *= fac;
      last_rejected = true;
    }
  }
  return t;
}

template <class Vector, class Rhs>
double integrate(Rhs&& rhs, Vector& y, double t0, double t1, const Options& opt, Stats& stats) {
  double hint = 0.0;
  return integrate(std::forward<Rhs>(rhs), y, t0, t1, opt, stats, [](double, const Vector&) { return true; }, hint);
}

}  // namespace catpump::ode
