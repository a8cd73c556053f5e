#pragma once

// Dormand-Prince 5(4) with PI step-size control and a positivity guard.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "rsirs/errors.hpp"

namespace rsirs {

struct OdeTolerances {
  double rel = 1e-8;
  double abs = 1e-10;
};

template <std::size_t N>
using OdeVec = std::array<double, N>;

/// Adaptive integrator for y' = f(y) on nonnegative states. The object keeps
/// the last accepted step-size proposal so consecutive calls to `advance`
/// (e.g. between regime switches) do not restart from scratch.
template <std::size_t N>
class DormandPrince45 {
 public:
  explicit DormandPrince45(OdeTolerances tol = {}) : tol_(tol) {}

  const OdeTolerances& tolerances() const { return tol_; }
  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }

  /// Integrates from t0 to exactly t1 (t1 >= t0), updating y in place.
  template <class Rhs>
  void advance(Rhs&& f, OdeVec<N>& y, double t0, double t1) {
    if (!(t1 >= t0)) throw Error(ErrorKind::domain, "integration interval must be forward in time");
    if (t1 == t0) return;
    double t = t0;
    OdeVec<N> k1 = f(y);
    for (double v : k1)
      if (!std::isfinite(v)) throw Error(ErrorKind::numeric, "vector field is not finite at t=" + std::to_string(t));
    if (!(h_ > 0.0)) h_ = initial_step(f, y, k1, t1 - t0);
    if (!(h_ > 0.0 && std::isfinite(h_))) throw Error(ErrorKind::numeric, "no usable initial step size");

    bool last_rejected = false;
    while (t < t1) {
      const double remaining = t1 - t;
      const bool final_step = h_ >= remaining;
      const double h = final_step ? remaining : h_;
      const double h_min = 1e-12 * std::max(1.0, std::abs(t));
      if (h < h_min && !final_step)
        throw Error(ErrorKind::stiffness, "step size underflow at t=" + std::to_string(t));

      OdeVec<N> k2, k3, k4, k5, k6, k7, tmp, y_new;
      for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a21 * k1[i]);
      k2 = f(tmp);
      for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      k3 = f(tmp);
      for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      k4 = f(tmp);
      for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      k5 = f(tmp);
      for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      k6 = f(tmp);
      for (std::size_t i = 0; i < N; ++i)
        y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      k7 = f(y_new);

      double err = 0.0;
      bool negative = false;
      for (std::size_t i = 0; i < N; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc = tol_.abs + tol_.rel * std::max(std::abs(y[i]), std::abs(y_new[i]));
        err += (e / sc) * (e / sc);
        if (y_new[i] < -tol_.abs) negative = true;
      }
      err = std::sqrt(err / static_cast<double>(N));
      if (!std::isfinite(err)) negative = true;

      if (negative) {
        ++rejected_;
        h_ = 0.5 * h;
        last_rejected = true;
        continue;
      }
      if (err <= 1.0) {
        ++accepted_;
        bool clamped = false;
        for (double& v : y_new) {
          if (v < 0.0) {
            v = 0.0;
            clamped = true;
          }
        }
        t = final_step ? t1 : t + h;
        y = y_new;
        k1 = clamped ? f(y) : k7;
        double fac = safety * std::pow(std::max(err, 1e-10), -alpha_exp) * std::pow(err_prev_, beta_exp);
        fac = std::clamp(fac, min_factor, max_factor);
        if (last_rejected) fac = std::min(fac, 1.0);
        // a truncated final step must not shrink the next proposal
        const double proposal = h * fac;
        h_ = final_step ? std::max(h_, proposal) : proposal;
        err_prev_ = std::max(err, 1e-4);
        last_rejected = false;
      } else {
        ++rejected_;
        const double fac = std::max(min_factor, safety * std::pow(err, -alpha_exp));
        h_ = h * fac;
        last_rejected = true;
      }
    }
  }

 private:
  template <class Rhs>
  double initial_step(Rhs& f, const OdeVec<N>& y, const OdeVec<N>& f0, double span) const {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = tol_.abs + tol_.rel * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    OdeVec<N> y1;
    for (std::size_t i = 0; i < N; ++i) y1[i] = std::max(0.0, y[i] + h0 * f0[i]);
    const OdeVec<N> f1 = f(y1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = tol_.abs + tol_.rel * std::abs(y[i]);
      d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    d2 = std::sqrt(d2 / N) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100.0 * h0, h1, span});
  }

  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                          a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                          a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                          b6 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                          e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

  static constexpr double safety = 0.9;
  static constexpr double min_factor = 0.2;
  static constexpr double max_factor = 10.0;
  static constexpr double alpha_exp = 0.7 / 5.0;
  static constexpr double beta_exp = 0.4 / 5.0;

  OdeTolerances tol_;
  double h_ = 0.0;
  double err_prev_ = 1e-4;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
};

}  // namespace rsirs
