#pragma once

// Hybrid simulation of ((S,I,R), r): the regime path is sampled first, then
// the frozen ODE is integrated across each inter-jump interval, landing
// exactly on every jump time and every output-grid time.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rsirs/analysis.hpp"
#include "rsirs/core_model.hpp"
#include "rsirs/dynamics.hpp"
#include "rsirs/errors.hpp"
#include "rsirs/integrator.hpp"
#include "rsirs/markov_chain.hpp"
#include "rsirs/parallel.hpp"
#include "rsirs/rng.hpp"

namespace rsirs {

struct TrajectorySample {
  double t = 0.0;
  EpidemicState z;
  std::size_t regime = 0;
};

struct SimulationOptions {
  double horizon = 0.0;
  OdeTolerances tol{};
  double output_dt = 1.0;
  /// I below this is set to 0 and the path flagged absorbed.
  double absorb_threshold = 1e-15;
};

struct SimulationOutcome {
  bool absorbed = false;
  double absorbed_at = std::numeric_limits<double>::quiet_NaN();
  std::size_t jumps = 0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
  SimulationOutcome outcome;

  double horizon() const { return samples.empty() ? 0.0 : samples.back().t; }
};

/// Integrates along a given regime path, calling `observe(sample)` at t=0,
/// at every grid time k*output_dt and at every jump instant (post-jump regime).
template <class Observer>
SimulationOutcome simulate_on_path(const ModelParams& p, const IncidenceFunction& inc, const RegimePath& path,
                                   const EpidemicState& z0, const SimulationOptions& opt, Observer&& observe) {
  if (!z0.is_finite_nonnegative()) throw Error(ErrorKind::domain, "initial state must be finite and nonnegative");
  if (!(opt.output_dt > 0.0)) throw Error(ErrorKind::domain, "output_dt must be positive");
  for (std::size_t e : path.states) detail::check_regime(p, e);

  SimulationOutcome out;
  out.jumps = path.jumps();
  const double horizon = path.horizon;
  DormandPrince45<3> stepper(opt.tol);
  OdeVec<3> y = z0.as_array();
  std::size_t regime = path.states.front();
  double beta = p.betas[regime];
  auto rhs = [&](const OdeVec<3>& z) { return detail::rhs(p, inc, beta, z); };

  double t = 0.0;
  std::size_t next_jump = 1;
  std::size_t next_grid = 1;
  observe(TrajectorySample{0.0, z0, regime});
  while (t < horizon) {
    const double t_grid = std::min(static_cast<double>(next_grid) * opt.output_dt, horizon);
    const double t_jump =
        next_jump < path.jump_times.size() ? path.jump_times[next_jump] : std::numeric_limits<double>::infinity();
    const double t_next = std::min(t_grid, t_jump);
    stepper.advance(rhs, y, t, t_next);
    t = t_next;
    if (!out.absorbed && y[1] < opt.absorb_threshold) {
      y[1] = 0.0;
      out.absorbed = true;
      out.absorbed_at = t;
    }
    if (t_jump <= t_grid) {
      regime = path.states[next_jump++];
      beta = p.betas[regime];
    }
    if (t_grid <= t_jump) ++next_grid;
    observe(TrajectorySample{t, EpidemicState::from_array(y), regime});
  }
  return out;
}

template <class Observer>
SimulationOutcome simulate_observed(const ModelParams& p, const IncidenceFunction& inc, const CtmcGenerator& gen,
                                    const EpidemicState& z0, std::size_t e0, const SimulationOptions& opt,
                                    RngStream& rng, Observer&& observe) {
  if (gen.regimes() != p.regimes()) throw Error(ErrorKind::domain, "generator and betas disagree on the regime count");
  const RegimePath path = sample_path(gen, e0, opt.horizon, rng);
  return simulate_on_path(p, inc, path, z0, opt, std::forward<Observer>(observe));
}

/// One full trajectory driven by stream (master_seed, path_index).
inline Trajectory simulate(const ModelParams& p, const IncidenceFunction& inc, const CtmcGenerator& gen,
                           const EpidemicState& z0, std::size_t e0, const SimulationOptions& opt,
                           std::uint64_t master_seed, std::uint64_t path_index) {
  RngStream rng(master_seed, path_index);
  Trajectory traj;
  traj.master_seed = master_seed;
  traj.path_index = path_index;
  traj.samples.reserve(static_cast<std::size_t>(opt.horizon / opt.output_dt) + 2);
  traj.outcome = simulate_observed(p, inc, gen, z0, e0, opt, rng,
                                   [&](const TrajectorySample& s) { traj.samples.push_back(s); });
  return traj;
}

/// Trapezoidal integral of a piecewise-linear signal restricted to [from, to].
class WindowIntegral {
 public:
  WindowIntegral(double from, double to) : from_(from), to_(to) {}

  void add(double t, double v) {
    if (has_prev_ && t > prev_t_) {
      const double a = std::max(prev_t_, from_);
      const double b = std::min(t, to_);
      if (b > a) {
        const auto at = [&](double s) { return prev_v_ + (v - prev_v_) * (s - prev_t_) / (t - prev_t_); };
        integral_ += 0.5 * (at(a) + at(b)) * (b - a);
        span_ += b - a;
      }
    }
    prev_t_ = t;
    prev_v_ = v;
    has_prev_ = true;
  }

  double integral() const { return integral_; }
  double span() const { return span_; }
  double mean() const { return span_ > 0.0 ? integral_ / span_ : std::numeric_limits<double>::quiet_NaN(); }

 private:
  double from_, to_;
  double prev_t_ = 0.0, prev_v_ = 0.0;
  bool has_prev_ = false;
  double integral_ = 0.0;
  double span_ = 0.0;
};

/// Trapezoidal time average of I over [burn_in, horizon].
inline double time_mean_infectives(const Trajectory& traj, double burn_in) {
  if (traj.samples.size() < 2 || !(burn_in < traj.horizon()))
    throw Error(ErrorKind::domain, "burn_in must be smaller than the trajectory horizon");
  WindowIntegral acc(burn_in, traj.horizon());
  for (const auto& s : traj.samples) acc.add(s.t, s.z.i);
  return acc.mean();
}

struct DecaySlope {
  double slope = 0.0;  ///< 1/day
  bool truncated = false;
  std::size_t points = 0;
  double window_start = 0.0;
  double window_end = 0.0;
};

namespace detail {

inline DecaySlope fit_log_slope(const std::vector<std::pair<double, double>>& pts, bool truncated) {
  if (pts.size() < 2) throw Error(ErrorKind::domain, "log-decay fit needs at least two samples with I > 0");
  double mt = 0.0, my = 0.0;
  for (const auto& [t, y] : pts) {
    mt += t;
    my += y;
  }
  mt /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double stt = 0.0, sty = 0.0;
  for (const auto& [t, y] : pts) {
    stt += (t - mt) * (t - mt);
    sty += (t - mt) * (y - my);
  }
  return {sty / stt, truncated, pts.size(), pts.front().first, pts.back().first};
}

}  // namespace detail

/// Least-squares slope of log I over the trailing window. If I has been
/// absorbed at 0 the window ends at the last positive sample and the result
/// is flagged truncated.
inline DecaySlope log_decay_slope(const Trajectory& traj, double window) {
  if (!(window > 0.0)) throw Error(ErrorKind::domain, "window must be positive");
  std::size_t last = traj.samples.size();
  while (last > 0 && !(traj.samples[last - 1].z.i > 0.0)) --last;
  if (last == 0) throw Error(ErrorKind::domain, "I is never positive on the trajectory");
  const bool truncated = last < traj.samples.size();
  const double end = traj.samples[last - 1].t;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < last; ++k) {
    const auto& s = traj.samples[k];
    if (s.t >= end - window && s.z.i > 0.0) pts.emplace_back(s.t, std::log(s.z.i));
  }
  return detail::fit_log_slope(pts, truncated);
}

/// Streaming version of log_decay_slope.
class TrailingLogSlope {
 public:
  explicit TrailingLogSlope(double window) : window_(window) {}

  void add(const TrajectorySample& s) {
    if (!(s.z.i > 0.0)) {
      zero_seen_ = true;
      return;
    }
    if (zero_seen_) return;
    buf_.emplace_back(s.t, std::log(s.z.i));
    while (!buf_.empty() && buf_.front().first < s.t - window_) buf_.pop_front();
  }

  DecaySlope result() const {
    return detail::fit_log_slope(std::vector<std::pair<double, double>>(buf_.begin(), buf_.end()), zero_seen_);
  }

 private:
  double window_;
  bool zero_seen_ = false;
  std::deque<std::pair<double, double>> buf_;
};

// --- occupation measures ---------------------------------------------------

struct HistogramSpec {
  std::size_t bins = 64;
  double upper = 1.0;  ///< every axis spans [0, upper]
  std::size_t regimes = 1;
  double band_lower = 0.0;
  double band_upper = 0.0;
  double band_tol = 1e-6;  ///< relative

  static HistogramSpec for_model(const ModelParams& p, std::size_t bins = 64) {
    const PopulationBand band = invariant_region(p);
    return {bins, band.upper, p.regimes(), band.lower, band.upper, 1e-6};
  }

  friend bool operator==(const HistogramSpec&, const HistogramSpec&) = default;
};

/// Time-weighted occupation of (S,I,R) x regime. Stored as the regime
/// marginal, three pairwise (2D bin x regime) tables and a sparse 3D table
/// whose cells remember their time-weighted centroid.
class OccupationHistogram {
 public:
  struct Cell {
    double weight = 0.0;
    double sum_s = 0.0, sum_i = 0.0, sum_r = 0.0;

    EpidemicState centroid() const { return {sum_s / weight, sum_i / weight, sum_r / weight}; }
  };

  /// Pair order: (S,I), (S,R), (I,R).
  static constexpr std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};

  explicit OccupationHistogram(HistogramSpec spec) : spec_(spec), regime_mass_(spec.regimes, 0.0) {
    if (spec.bins < 2) throw Error(ErrorKind::domain, "histogram needs at least 2 bins per axis");
    if (!(spec.upper > 0.0)) throw Error(ErrorKind::domain, "histogram range must be positive");
    for (auto& t : tables_) t.assign(spec.regimes * spec.bins * spec.bins, 0.0);
  }

  const HistogramSpec& spec() const { return spec_; }
  double total_weight() const { return total_; }
  double outside_band_weight() const { return outside_band_; }
  double outside_box_weight() const { return outside_box_; }
  const std::vector<double>& regime_mass() const { return regime_mass_; }
  const std::vector<double>& pair_table(std::size_t k) const { return tables_[k]; }
  const std::map<std::uint64_t, Cell>& cells() const { return cells_; }

  std::vector<double> regime_marginal() const {
    std::vector<double> out(regime_mass_);
    for (double& v : out) v = total_ > 0.0 ? v / total_ : 0.0;
    return out;
  }

  /// Bin edges along any axis.
  std::vector<double> edges() const {
    std::vector<double> e(spec_.bins + 1);
    for (std::size_t k = 0; k <= spec_.bins; ++k)
      e[k] = spec_.upper * static_cast<double>(k) / static_cast<double>(spec_.bins);
    return e;
  }

  std::size_t bin_of(double x) const {
    const double u = x / spec_.upper * static_cast<double>(spec_.bins);
    if (!(u > 0.0)) return 0;
    return std::min(spec_.bins - 1, static_cast<std::size_t>(u));
  }

  void add(const EpidemicState& z, std::size_t regime, double weight) {
    if (!(weight > 0.0)) return;
    if (regime >= spec_.regimes) throw Error(ErrorKind::domain, "regime outside histogram range");
    const std::array<double, 3> x = z.as_array();
    std::array<std::size_t, 3> b{};
    for (int k = 0; k < 3; ++k) {
      b[k] = bin_of(x[k]);
      if (x[k] < 0.0 || x[k] > spec_.upper) outside_box_ += weight;
    }
    const double n = z.total();
    if (n < spec_.band_lower * (1.0 - spec_.band_tol) || n > spec_.band_upper * (1.0 + spec_.band_tol))
      outside_band_ += weight;
    total_ += weight;
    regime_mass_[regime] += weight;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      tables_[k][(regime * spec_.bins + b[pairs[k].first]) * spec_.bins + b[pairs[k].second]] += weight;
    Cell& c = cells_[(static_cast<std::uint64_t>(b[0]) * spec_.bins + b[1]) * spec_.bins + b[2]];
    c.weight += weight;
    c.sum_s += weight * z.s;
    c.sum_i += weight * z.i;
    c.sum_r += weight * z.r;
  }

  void merge(const OccupationHistogram& other) {
    if (!(spec_ == other.spec_)) throw Error(ErrorKind::incompatible_histograms, "cannot merge histograms with different binning");
    total_ += other.total_;
    outside_band_ += other.outside_band_;
    outside_box_ += other.outside_box_;
    for (std::size_t e = 0; e < regime_mass_.size(); ++e) regime_mass_[e] += other.regime_mass_[e];
    for (std::size_t k = 0; k < tables_.size(); ++k)
      for (std::size_t j = 0; j < tables_[k].size(); ++j) tables_[k][j] += other.tables_[k][j];
    for (const auto& [key, c] : other.cells_) {
      Cell& mine = cells_[key];
      mine.weight += c.weight;
      mine.sum_s += c.sum_s;
      mine.sum_i += c.sum_i;
      mine.sum_r += c.sum_r;
    }
  }

 private:
  HistogramSpec spec_;
  double total_ = 0.0;
  double outside_band_ = 0.0;
  double outside_box_ = 0.0;
  std::vector<double> regime_mass_;
  std::array<std::vector<double>, 3> tables_;
  std::map<std::uint64_t, Cell> cells_;
};

struct TimeWindow {
  double from = 0.0;
  double to = std::numeric_limits<double>::infinity();
};

/// Observer feeding a histogram with the part of a path inside a time window.
/// Each inter-sample interval carries the regime of its left end (r is
/// right-continuous) and its mass is split between the two endpoint states.
class HistogramAccumulator {
 public:
  HistogramAccumulator(HistogramSpec spec, TimeWindow window) : hist_(spec), window_(window) {}

  void operator()(const TrajectorySample& s) {
    if (has_prev_) {
      const double overlap = std::min(s.t, window_.to) - std::max(prev_.t, window_.from);
      if (overlap > 0.0) {
        hist_.add(prev_.z, prev_.regime, 0.5 * overlap);
        hist_.add(s.z, prev_.regime, 0.5 * overlap);
      }
    }
    prev_ = s;
    has_prev_ = true;
  }

  const OccupationHistogram& histogram() const { return hist_; }
  OccupationHistogram& histogram() { return hist_; }

 private:
  OccupationHistogram hist_;
  TimeWindow window_;
  TrajectorySample prev_;
  bool has_prev_ = false;
};

/// Pooled post-burn-in occupation histogram of several trajectories.
inline OccupationHistogram occupation_histogram(std::span<const Trajectory> trajs, const HistogramSpec& spec,
                                                double burn_in) {
  OccupationHistogram pooled(spec);
  for (const auto& traj : trajs) {
    HistogramAccumulator acc(spec, {burn_in, std::numeric_limits<double>::infinity()});
    for (const auto& s : traj.samples) acc(s);
    pooled.merge(acc.histogram());
  }
  return pooled;
}

/// Discretised total-variation distance: the largest 1/2 L1 distance among the
/// three pairwise (2D bin x regime) projections. Each projection can only
/// shrink TV, so this is a lower bound on the TV of the full joint laws.
inline double tv_distance(const OccupationHistogram& h1, const OccupationHistogram& h2) {
  if (!(h1.spec() == h2.spec())) throw Error(ErrorKind::incompatible_histograms, "histograms use different binning");
  if (!(h1.total_weight() > 0.0 && h2.total_weight() > 0.0))
    throw Error(ErrorKind::domain, "total variation of an empty histogram");
  double tv = 0.0;
  for (std::size_t k = 0; k < OccupationHistogram::pairs.size(); ++k) {
    const auto& a = h1.pair_table(k);
    const auto& b = h2.pair_table(k);
    double l1 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) l1 += std::abs(a[j] / h1.total_weight() - b[j] / h2.total_weight());
    tv = std::max(tv, 0.5 * l1);
  }
  return std::min(tv, 1.0);
}

/// Fraction of histogram mass whose cell centroid lies within `radius` of
/// some Γ sample point.
inline double gamma_support_check(const OccupationHistogram& hist, const std::vector<EpidemicState>& gamma,
                                  double radius) {
  if (gamma.empty()) throw Error(ErrorKind::domain, "Gamma sample is empty");
  if (!(radius >= 0.0)) throw Error(ErrorKind::domain, "radius must be nonnegative");
  if (!(hist.total_weight() > 0.0)) throw Error(ErrorKind::domain, "histogram is empty");
  if (std::isinf(radius)) return 1.0;

  using Key = std::tuple<long long, long long, long long>;
  const double cell = std::max(radius, 1e-12);
  auto key_of = [&](const EpidemicState& z) {
    return Key{static_cast<long long>(std::floor(z.s / cell)), static_cast<long long>(std::floor(z.i / cell)),
               static_cast<long long>(std::floor(z.r / cell))};
  };
  std::map<Key, std::vector<std::size_t>> buckets;
  for (std::size_t k = 0; k < gamma.size(); ++k) buckets[key_of(gamma[k])].push_back(k);

  const double r2 = radius * radius;
  double near = 0.0;
  for (const auto& [id, c] : hist.cells()) {
    const EpidemicState z = c.centroid();
    const auto [ks, ki, kr] = key_of(z);
    bool hit = false;
    for (long long ds = -1; ds <= 1 && !hit; ++ds)
      for (long long di = -1; di <= 1 && !hit; ++di)
        for (long long dr = -1; dr <= 1 && !hit; ++dr) {
          const auto it = buckets.find(Key{ks + ds, ki + di, kr + dr});
          if (it == buckets.end()) continue;
          for (std::size_t g : it->second) {
            const double a = gamma[g].s - z.s, b = gamma[g].i - z.i, d = gamma[g].r - z.r;
            if (a * a + b * b + d * d <= r2) {
              hit = true;
              break;
            }
          }
        }
    if (hit) near += c.weight;
  }
  return near / hist.total_weight();
}

// --- ensembles -------------------------------------------------------------

struct PathSummary {
  std::size_t path_index = 0;
  double time_mean_i = 0.0;  ///< over [burn_in, horizon]
  double min_i = 0.0;        ///< over all output samples
  double min_n = 0.0;        ///< over [burn_in, horizon]
  double max_n = 0.0;
  std::vector<double> regime_occupancy;  ///< fractions of [0, horizon]
  EpidemicState final_state;
  SimulationOutcome outcome;
  std::optional<DecaySlope> decay_slope;
  double band_entry_time = std::numeric_limits<double>::quiet_NaN();
  bool left_band_after_entry = false;
};

struct EnsembleOptions {
  std::size_t n_paths = 1;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  std::optional<double> burn_in;  ///< default: 10% of the horizon
  double slope_window = 1000.0;

  double effective_burn_in(double horizon) const { return burn_in ? *burn_in : 0.1 * horizon; }
};

/// Streaming per-path statistics.
class SummaryObserver {
 public:
  SummaryObserver(const ModelParams& p, double horizon, double burn_in, double slope_window)
      : band_(invariant_region(p)),
        burn_in_(burn_in),
        mean_i_(burn_in, horizon),
        slope_(slope_window),
        occupancy_(p.regimes(), 0.0),
        horizon_(horizon) {}

  void operator()(const TrajectorySample& s) {
    mean_i_.add(s.t, s.z.i);
    slope_.add(s);
    if (has_prev_) occupancy_[prev_regime_] += s.t - prev_t_;
    prev_t_ = s.t;
    prev_regime_ = s.regime;
    has_prev_ = true;
    min_i_ = std::min(min_i_, s.z.i);
    const double n = s.z.total();
    if (s.t >= burn_in_) {
      min_n_ = std::min(min_n_, n);
      max_n_ = std::max(max_n_, n);
    }
    if (std::isnan(entry_) && band_.contains(n)) entry_ = s.t;
    if (!std::isnan(entry_) && (n < band_.lower * (1.0 - 1e-6) || n > band_.upper * (1.0 + 1e-6))) left_ = true;
    last_ = s.z;
  }

  PathSummary summary(std::size_t index, const SimulationOutcome& outcome) const {
    PathSummary out;
    out.path_index = index;
    out.time_mean_i = mean_i_.mean();
    out.min_i = min_i_;
    out.min_n = min_n_;
    out.max_n = max_n_;
    out.regime_occupancy = occupancy_;
    for (double& v : out.regime_occupancy) v /= horizon_;
    out.final_state = last_;
    out.outcome = outcome;
    try {
      out.decay_slope = slope_.result();
    } catch (const Error&) {
      out.decay_slope.reset();
    }
    out.band_entry_time = entry_;
    out.left_band_after_entry = left_;
    return out;
  }

 private:
  PopulationBand band_;
  double burn_in_;
  WindowIntegral mean_i_;
  TrailingLogSlope slope_;
  std::vector<double> occupancy_;
  double horizon_;
  double prev_t_ = 0.0;
  std::size_t prev_regime_ = 0;
  bool has_prev_ = false;
  double min_i_ = std::numeric_limits<double>::infinity();
  double min_n_ = std::numeric_limits<double>::infinity();
  double max_n_ = -std::numeric_limits<double>::infinity();
  double entry_ = std::numeric_limits<double>::quiet_NaN();
  bool left_ = false;
  EpidemicState last_;
};

struct EnsembleResult {
  std::vector<PathSummary> summaries;
  /// One pooled histogram per requested window, in request order.
  std::vector<OccupationHistogram> histograms;
};

namespace detail {

struct PathResult {
  PathSummary summary;
  std::vector<OccupationHistogram> histograms;
};

[[noreturn]] inline void rethrow_with_path(const Error& err, std::size_t k) {
  throw Error(err.kind(), "path " + std::to_string(k) + ": " + err.what());
}

}  // namespace detail

/// Independent paths on streams (master_seed, k). Histograms are reduced in
/// path order, so results do not depend on the thread count.
inline EnsembleResult run_ensemble(const ModelParams& p, const IncidenceFunction& inc, const CtmcGenerator& gen,
                                   const EpidemicState& z0, std::size_t e0, const SimulationOptions& sim,
                                   const EnsembleOptions& ens, std::optional<HistogramSpec> hist_spec = std::nullopt,
                                   const std::vector<TimeWindow>& windows = {}) {
  if (ens.n_paths == 0) throw Error(ErrorKind::domain, "ensemble needs at least one path");
  const double burn_in = ens.effective_burn_in(sim.horizon);
  if (!(burn_in < sim.horizon)) throw Error(ErrorKind::domain, "burn_in must be smaller than the horizon");
  if (!windows.empty() && !hist_spec) throw Error(ErrorKind::domain, "histogram windows need a histogram spec");

  EnsembleResult result;
  result.summaries.resize(ens.n_paths);
  for (std::size_t w = 0; w < windows.size(); ++w) result.histograms.emplace_back(*hist_spec);

  auto run_one = [&](std::size_t k) {
    RngStream rng(ens.master_seed, k);
    SummaryObserver summary(p, sim.horizon, burn_in, ens.slope_window);
    std::vector<HistogramAccumulator> accs;
    for (const auto& w : windows) accs.emplace_back(*hist_spec, w);
    SimulationOutcome outcome;
    try {
      outcome = simulate_observed(p, inc, gen, z0, e0, sim, rng, [&](const TrajectorySample& s) {
        summary(s);
        for (auto& a : accs) a(s);
      });
    } catch (const Error& err) {
      detail::rethrow_with_path(err, k);
    }
    detail::PathResult r{summary.summary(k, outcome), {}};
    for (auto& a : accs) r.histograms.push_back(std::move(a.histogram()));
    return r;
  };

  ordered_reduce<detail::PathResult>(ens.n_paths, ens.threads, 16, run_one, [&](std::size_t k, detail::PathResult r) {
    result.summaries[k] = std::move(r.summary);
    for (std::size_t w = 0; w < r.histograms.size(); ++w) result.histograms[w].merge(r.histograms[w]);
  });
  return result;
}

inline std::vector<PathSummary> ensemble(const ModelParams& p, const IncidenceFunction& inc, const CtmcGenerator& gen,
                                         const EpidemicState& z0, std::size_t e0, const SimulationOptions& sim,
                                         const EnsembleOptions& ens) {
  return run_ensemble(p, inc, gen, z0, e0, sim, ens).summaries;
}

/// Time-weighted regime occupancy pooled over equal-horizon paths.
inline std::vector<double> pooled_occupancy(const std::vector<PathSummary>& summaries) {
  if (summaries.empty()) return {};
  std::vector<double> out(summaries.front().regime_occupancy.size(), 0.0);
  for (const auto& s : summaries)
    for (std::size_t e = 0; e < out.size(); ++e) out[e] += s.regime_occupancy[e];
  for (double& v : out) v /= static_cast<double>(summaries.size());
  return out;
}

// --- CSV -------------------------------------------------------------------

inline std::string format_sig10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_csv_header(std::ostream& os) { os << "t,S,I,R,regime\n"; }

/// One CSV row; regimes are written 1-based.
inline void write_csv_row(std::ostream& os, const TrajectorySample& s) {
  os << format_sig10(s.t) << ',' << format_sig10(s.z.s) << ',' << format_sig10(s.z.i) << ',' << format_sig10(s.z.r)
     << ',' << (s.regime + 1) << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  write_csv_header(os);
  for (const auto& s : traj.samples) write_csv_row(os, s);
}

}  // namespace rsirs
