#pragma once

// Threshold quantities: R0 in a random environment, per-regime drifts B(e),
// the extinction/persistence classification and the population band.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rsirs/core_model.hpp"
#include "rsirs/dynamics.hpp"
#include "rsirs/errors.hpp"
#include "rsirs/markov_chain.hpp"

namespace rsirs {

enum class Classification { extinct, persistent, critical };

constexpr const char* to_string(Classification c) {
  switch (c) {
    case Classification::extinct: return "extinct";
    case Classification::persistent: return "persistent";
    case Classification::critical: return "critical";
  }
  return "unknown";
}

namespace detail {

inline void check_dimensions(const ModelParams& p, const StationaryDist& pi) {
  if (pi.regimes() != p.regimes())
    throw Error(ErrorKind::domain, "stationary distribution and betas disagree on the regime count");
}

}  // namespace detail

/// R0 = sum_e pi_e R0^e.
inline double basic_reproduction_number(const ModelParams& p, const IncidenceFunction& inc, const StationaryDist& pi) {
  detail::check_dimensions(p, pi);
  double weighted = 0.0;
  for (std::size_t e = 0; e < p.regimes(); ++e) weighted += pi[e] * (p.lambda_in * p.betas[e] * inc.gprime0() / p.mu);
  return weighted / p.removal_rate();
}

/// B(e) = Λ β_e G'(0)/μ - (μ+α+δ), the growth rate bound of log I in regime e.
inline double regime_drift(const ModelParams& p, const IncidenceFunction& inc, std::size_t e) {
  detail::check_regime(p, e);
  return p.lambda_in * p.betas[e] * inc.gprime0() / p.mu - p.removal_rate();
}

inline double weighted_drift(const ModelParams& p, const IncidenceFunction& inc, const StationaryDist& pi) {
  detail::check_dimensions(p, pi);
  double sum = 0.0;
  for (std::size_t e = 0; e < p.regimes(); ++e) sum += pi[e] * regime_drift(p, inc, e);
  return sum;
}

/// Time-mean lower bound on I when the weighted drift is positive:
/// μ² / (β^M (μϑ + β^M G'(0)²) Λ) · Σ π_e B(e).
inline double persistence_lower_bound(const ModelParams& p, const IncidenceFunction& inc, const StationaryDist& pi,
                                      double theta) {
  if (!(theta >= 0.0)) throw Error(ErrorKind::domain, "theta must be nonnegative");
  const double drift = weighted_drift(p, inc, pi);
  if (!(drift > 0.0)) throw Error(ErrorKind::not_persistent, "weighted drift is not positive");
  const double bm = p.beta_max();
  const double gp0 = inc.gprime0();
  return p.mu * p.mu / (bm * (p.mu * theta + bm * gp0 * gp0) * p.lambda_in) * drift;
}

struct PopulationBand {
  double lower = 0.0;  ///< Λ/(μ+α)
  double upper = 0.0;  ///< Λ/μ
  bool degenerate = false;

  bool contains(double n) const { return n > lower && n < upper; }
};

inline PopulationBand invariant_region(const ModelParams& p) {
  if (!(p.mu > 0.0)) throw Error(ErrorKind::domain, "mu must be positive");
  PopulationBand band{p.lambda_in / (p.mu + p.alpha), p.lambda_in / p.mu, false};
  band.degenerate = !(band.upper > band.lower);
  return band;
}

struct ThresholdReport {
  double r0 = 0.0;
  std::vector<double> r0_per_regime;
  std::vector<double> b_values;
  double weighted_drift = 0.0;
  /// |Σπ B - (R0-1)(μ+α+δ)|, should be round-off.
  double identity_residual = 0.0;
  Classification classification = Classification::critical;
  std::optional<double> persistence_bound;
  std::optional<double> extinction_rate;
  double theta = 0.0;
  PopulationBand band;
};

/// Classification by R0 versus 1, refusing a call inside |R0-1| <= eps.
/// When `theta` is not given it is estimated on a 10^6+1 point grid.
inline ThresholdReport classify_threshold(const ModelParams& p, const IncidenceFunction& inc, const StationaryDist& pi,
                                          double eps = 1e-9, std::optional<double> theta = std::nullopt) {
  if (!(eps >= 0.0)) throw Error(ErrorKind::domain, "critical band eps must be nonnegative");
  ThresholdReport rep;
  rep.r0 = basic_reproduction_number(p, inc, pi);
  for (std::size_t e = 0; e < p.regimes(); ++e) {
    rep.r0_per_regime.push_back(deterministic_r0(p, inc, e));
    rep.b_values.push_back(regime_drift(p, inc, e));
  }
  rep.weighted_drift = weighted_drift(p, inc, pi);
  rep.identity_residual = std::abs(rep.weighted_drift - (rep.r0 - 1.0) * p.removal_rate());
  rep.band = invariant_region(p);
  rep.theta = theta ? *theta : validate_assumptions(inc, p, 1'000'001).theta_estimate;

  if (std::abs(rep.r0 - 1.0) <= eps) {
    rep.classification = Classification::critical;
  } else if (rep.r0 > 1.0) {
    rep.classification = Classification::persistent;
    if (rep.weighted_drift > 0.0) rep.persistence_bound = persistence_lower_bound(p, inc, pi, rep.theta);
  } else {
    rep.classification = Classification::extinct;
    rep.extinction_rate = -rep.weighted_drift;
  }
  return rep;
}

}  // namespace rsirs
