#pragma once

// Frozen-regime vector fields Y_e, their flows and equilibria.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "rsirs/core_model.hpp"
#include "rsirs/errors.hpp"
#include "rsirs/integrator.hpp"

namespace rsirs {

struct VectorFieldEval {
  double ds = 0.0;
  double di = 0.0;
  double dr = 0.0;

  Eigen::Vector3d as_vector() const { return {ds, di, dr}; }
  double max_abs() const { return std::max({std::abs(ds), std::abs(di), std::abs(dr)}); }
};

namespace detail {

inline void check_regime(const ModelParams& p, std::size_t e) {
  if (e >= p.regimes()) throw Error(ErrorKind::domain, "regime index " + std::to_string(e) + " out of range");
}

/// Right-hand side of the regime-e system, raw array form for the integrator.
inline OdeVec<3> rhs(const ModelParams& p, const IncidenceFunction& inc, double beta, const OdeVec<3>& z) {
  const double infection = beta * z[0] * inc.G(std::max(z[1], 0.0));
  return {p.lambda_in - p.mu * z[0] + p.lambda_loss * z[2] - infection,
          infection - p.removal_rate() * z[1],
          p.delta * z[1] - (p.mu + p.lambda_loss) * z[2]};
}

}  // namespace detail

/// Y_e(z).
inline VectorFieldEval vector_field(const ModelParams& p, const IncidenceFunction& inc, std::size_t e,
                                    const EpidemicState& z) {
  detail::check_regime(p, e);
  const auto d = detail::rhs(p, inc, p.betas[e], z.as_array());
  return {d[0], d[1], d[2]};
}

inline Eigen::Vector3d field_vector(const ModelParams& p, const IncidenceFunction& inc, std::size_t e,
                                    const Eigen::Vector3d& z) {
  return vector_field(p, inc, e, {z(0), z(1), z(2)}).as_vector();
}

/// Central-difference Jacobian of Y_e with relative step 1e-6.
inline Eigen::Matrix3d jacobian_fd(const ModelParams& p, const IncidenceFunction& inc, std::size_t e,
                                   const EpidemicState& z) {
  detail::check_regime(p, e);
  const Eigen::Vector3d x{z.s, z.i, z.r};
  Eigen::Matrix3d j;
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-6 * std::max(std::abs(x(k)), 1.0);
    Eigen::Vector3d up = x, dn = x;
    up(k) += h;
    dn(k) = std::max(dn(k) - h, 0.0);
    j.col(k) = (field_vector(p, inc, e, up) - field_vector(p, inc, e, dn)) / (up(k) - dn(k));
  }
  return j;
}

/// dY_e/dz; analytic whenever the incidence provides G'.
inline Eigen::Matrix3d jacobian(const ModelParams& p, const IncidenceFunction& inc, std::size_t e,
                                const EpidemicState& z) {
  detail::check_regime(p, e);
  if (!inc.has_derivative()) return jacobian_fd(p, inc, e, z);
  const double beta = p.betas[e];
  const double gi = inc.G(z.i);
  const double dgi = inc.dG(z.i);
  Eigen::Matrix3d j;
  j << -p.mu - beta * gi, -beta * z.s * dgi, p.lambda_loss,  //
      beta * gi, beta * z.s * dgi - p.removal_rate(), 0.0,    //
      0.0, p.delta, -(p.mu + p.lambda_loss);
  return j;
}

/// R0^e = Λ β_e G'(0) / (μ (μ+α+δ)).
inline double deterministic_r0(const ModelParams& p, const IncidenceFunction& inc, std::size_t e) {
  detail::check_regime(p, e);
  return p.lambda_in * p.betas[e] * inc.gprime0() / (p.mu * p.removal_rate());
}

/// The flow map of regime e: the state at time t starting from z0.
inline EpidemicState flow(const ModelParams& p, const IncidenceFunction& inc, std::size_t e, const EpidemicState& z0,
                          double t, OdeTolerances tol = {}) {
  detail::check_regime(p, e);
  if (!(t >= 0.0)) throw Error(ErrorKind::domain, "flow time must be nonnegative");
  if (!z0.is_finite_nonnegative()) throw Error(ErrorKind::domain, "flow start must be finite and nonnegative");
  OdeVec<3> y = z0.as_array();
  DormandPrince45<3> stepper(tol);
  const double beta = p.betas[e];
  stepper.advance([&](const OdeVec<3>& z) { return detail::rhs(p, inc, beta, z); }, y, 0.0, t);
  return EpidemicState::from_array(y);
}

inline EpidemicState disease_free_state(const ModelParams& p) { return {p.carrying_population(), 0.0, 0.0}; }

struct Equilibrium {
  EpidemicState state;
  std::size_t regime = 0;
  double residual = 0.0;  ///< ||Y_e(state)||_inf
  bool endemic = true;
};

namespace detail {

inline bool newton_polish(const ModelParams& p, const IncidenceFunction& inc, std::size_t e, EpidemicState& z,
                          double target) {
  auto res = [&](const EpidemicState& w) { return vector_field(p, inc, e, w); };
  VectorFieldEval f = res(z);
  for (int iter = 0; iter < 100; ++iter) {
    if (f.max_abs() < target) return true;
    const Eigen::Vector3d step = jacobian(p, inc, e, z).fullPivLu().solve(-f.as_vector());
    if (!step.allFinite()) return false;
    double damping = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      const EpidemicState trial{z.s + damping * step(0), z.i + damping * step(1), z.r + damping * step(2)};
      if (trial.is_finite_nonnegative() && trial.i > 0.0) {
        const VectorFieldEval ft = res(trial);
        if (ft.max_abs() < f.max_abs()) {
          z = trial;
          f = ft;
          improved = true;
          break;
        }
      }
      damping *= 0.5;
    }
    if (!improved) return f.max_abs() < target * 1e3;
  }
  return f.max_abs() < target * 1e3;
}

}  // namespace detail

/// Endemic equilibrium of regime e: long-time flow for a starting guess,
/// then damped Newton. Requires R0^e > 1.
inline Equilibrium find_equilibrium(const ModelParams& p, const IncidenceFunction& inc, std::size_t e,
                                    OdeTolerances tol = {}) {
  detail::check_regime(p, e);
  const double r0 = deterministic_r0(p, inc, e);
  if (!(r0 > 1.0))
    throw Error(ErrorKind::no_endemic_equilibrium,
                "regime " + std::to_string(e + 1) + " has R0=" + std::to_string(r0) +
                    " <= 1; the disease-free state is its only equilibrium");
  const double n_max = p.carrying_population();
  const double certified = 1e-10 * std::max(n_max, 1.0);
  const std::array<EpidemicState, 3> probes{EpidemicState{0.6 * n_max, 0.1 * n_max, 0.1 * n_max},
                                            EpidemicState{0.3 * n_max, 0.3 * n_max, 0.2 * n_max},
                                            EpidemicState{0.9 * n_max, 0.01 * n_max, 0.0}};
  for (const auto& probe : probes) {
    for (double horizon : {1e4, 1e5}) {
      EpidemicState z = flow(p, inc, e, probe, horizon, tol);
      if (!(z.i > 0.0)) continue;
      if (detail::newton_polish(p, inc, e, z, 1e-3 * certified)) {
        const double residual = vector_field(p, inc, e, z).max_abs();
        if (residual < certified && z.i > 0.0) return {z, e, residual, true};
      }
    }
  }
  throw Error(ErrorKind::numeric, "Newton iteration for the endemic equilibrium did not converge");
}

}  // namespace rsirs
