#pragma once

// Command implementations behind the rsirs CLI. Each command returns a JSON
// report and writes its artifacts below the configured output directory.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rsirs/analysis.hpp"
#include "rsirs/config.hpp"
#include "rsirs/dynamics.hpp"
#include "rsirs/lie_algebra.hpp"
#include "rsirs/parallel.hpp"
#include "rsirs/pdmp_sim.hpp"

namespace rsirs {

/// 0 ok, 2 config, 3 integrator, 4 model structure, 5 IO.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::domain:
    case ErrorKind::invalid_incidence:
    case ErrorKind::invalid_rate:
    case ErrorKind::invalid_generator:
    case ErrorKind::reducible:
    case ErrorKind::incompatible_histograms:
      return 2;
    case ErrorKind::numeric:
    case ErrorKind::stiffness:
      return 3;
    case ErrorKind::no_endemic_equilibrium:
    case ErrorKind::not_persistent:
    case ErrorKind::unsupported:
    case ErrorKind::cannot_seed_gamma:
      return 4;
    case ErrorKind::io:
      return 5;
  }
  return 1;
}

/// The two-regime example: non-monotone incidence with a = 0.001 and
/// Q = (0.5/365) [[-169, 169], [196, -196]].
inline RunConfig example_config() {
  RunConfig c;
  c.model.lambda_in = 0.33;
  c.model.mu = 0.006;
  c.model.lambda_loss = 0.021;
  c.model.alpha = 0.06;
  c.model.delta = 0.04;
  c.model.betas = {0.0056, 0.0013};
  c.incidence = {"nonmonotonic", 0.001, "michaelis", 1.0};
  c.generator = {{{-169.0, 169.0}, {196.0, -196.0}}, 0.5, 365.0};
  c.z0 = {50.0, 1.0, 0.0};
  c.e0 = 0;
  c.horizon = 2000.0;
  return c;
}

/// E*_1 as quoted with the example, used as the flow-check start point.
inline EpidemicState example_quoted_endemic() { return {19.0161, 2.8783, 4.2830}; }
inline EpidemicState example_quoted_flow_target() { return {37.3966, 0.0033, 0.4464}; }

// --- JSON helpers ------------------------------------------------------------

inline Json to_json(const EpidemicState& z) { return {{"S", z.s}, {"I", z.i}, {"R", z.r}}; }

inline Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const PopulationBand& b) {
  return {{"lower", b.lower}, {"upper", b.upper}, {"degenerate", b.degenerate}};
}

inline Json to_json(const DecaySlope& d) {
  return {{"slope", d.slope},
          {"truncated", d.truncated},
          {"points", d.points},
          {"window_start", d.window_start},
          {"window_end", d.window_end}};
}

inline Json to_json(const PathSummary& s) {
  return {{"path_index", s.path_index},
          {"time_mean_I", nullable(s.time_mean_i)},
          {"min_I", s.min_i},
          {"min_N", nullable(s.min_n)},
          {"max_N", nullable(s.max_n)},
          {"regime_occupancy", s.regime_occupancy},
          {"final_state", to_json(s.final_state)},
          {"absorbed", s.outcome.absorbed},
          {"absorbed_at", nullable(s.outcome.absorbed_at)},
          {"jumps", s.outcome.jumps},
          {"decay_slope", s.decay_slope ? to_json(*s.decay_slope) : Json(nullptr)},
          {"band_entry_time", nullable(s.band_entry_time)},
          {"left_band_after_entry", s.left_band_after_entry}};
}

inline Json to_json(const GammaWord& w) {
  Json out = Json::array();
  for (const auto& step : w) out.push_back({{"regime", step.regime + 1}, {"duration", step.duration}});
  return out;
}

inline Json to_json(const ThresholdReport& r, const StationaryDist& pi) {
  Json j{{"pi", std::vector<double>(pi.pi.data(), pi.pi.data() + pi.pi.size())},
         {"pi_residual", pi.residual},
         {"r0", r.r0},
         {"r0_per_regime", r.r0_per_regime},
         {"b_values", r.b_values},
         {"weighted_drift", r.weighted_drift},
         {"identity_residual", r.identity_residual},
         {"classification", to_string(r.classification)},
         {"theta", r.theta},
         {"band", to_json(r.band)}};
  j["persistence_bound"] = r.persistence_bound ? Json(*r.persistence_bound) : Json(nullptr);
  j["extinction_rate"] = r.extinction_rate ? Json(*r.extinction_rate) : Json(nullptr);
  return j;
}

// --- output ------------------------------------------------------------------

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec || !std::filesystem::is_directory(root_))
      throw Error(ErrorKind::io, "cannot create output directory '" + root_.string() + "'", root_.string());
  }

  const std::filesystem::path& root() const { return root_; }

  void write(const std::string& name, const std::string& content) const {
    const auto path = root_ / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing", path.string());
    os << content;
    os.flush();
    if (!os) throw Error(ErrorKind::io, "failed writing '" + path.string() + "'", path.string());
  }

  void write_json(const std::string& name, const Json& j) const { write(name, j.dump(2) + "\n"); }

 private:
  std::filesystem::path root_;
};

inline std::string trajectory_csv(const std::vector<TrajectorySample>& samples) {
  std::ostringstream os;
  write_csv_header(os);
  for (const auto& s : samples) write_csv_row(os, s);
  return os.str();
}

inline std::string path_file_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "path_%05zu.csv", k);
  return buf;
}

// --- commands ------------------------------------------------------------------

inline Json cmd_analyze(const RunConfig& cfg) {
  const auto gen = cfg.ctmc();
  const auto inc = cfg.incidence_function();
  const auto pi = stationary_distribution(gen);
  const auto assumptions = validate_assumptions(inc, cfg.model, cfg.theta_grid);
  const auto rep = classify_threshold(cfg.model, inc, pi, cfg.critical_eps, assumptions.theta_estimate);
  Json j = to_json(rep, pi);
  j["command"] = "analyze";
  j["incidence"] = inc.name();
  j["assumptions"] = {{"h1", assumptions.h1_ok}, {"h2", assumptions.h2_ok}, {"theta_grid", assumptions.grid_n},
                      {"theta_analytic_derivative", assumptions.theta_analytic}, {"notes", assumptions.notes}};
  OutputDir(cfg.out).write_json("analyze.json", j);
  return j;
}

inline Json cmd_equilibrium(const RunConfig& cfg) {
  const auto inc = cfg.incidence_function();
  Json regimes = Json::array();
  for (std::size_t e = 0; e < cfg.model.regimes(); ++e) {
    const double r0 = deterministic_r0(cfg.model, inc, e);
    Json item{{"regime", e + 1}, {"r0", r0}};
    if (r0 > 1.0) {
      const auto eq = find_equilibrium(cfg.model, inc, e, cfg.ode);
      item["endemic"] = true;
      item["state"] = to_json(eq.state);
      item["residual"] = eq.residual;
    } else {
      item["endemic"] = false;
      item["state"] = to_json(disease_free_state(cfg.model));
      item["residual"] = vector_field(cfg.model, inc, e, disease_free_state(cfg.model)).max_abs();
    }
    regimes.push_back(item);
  }
  Json j{{"command", "equilibrium"}, {"regimes", regimes}};
  OutputDir(cfg.out).write_json("equilibrium.json", j);
  return j;
}

/// One CSV per path plus a summary; path k always uses stream (seed, k).
inline Json cmd_simulate(const RunConfig& cfg) {
  const auto gen = cfg.ctmc();
  const auto inc = cfg.incidence_function();
  const auto sim = cfg.simulation();
  const auto ens = cfg.ensemble();
  const double burn_in = ens.effective_burn_in(sim.horizon);
  const OutputDir out(cfg.out);

  struct PathOutput {
    std::string csv;
    PathSummary summary;
  };
  Json paths = Json::array();
  ordered_reduce<PathOutput>(
      cfg.paths, cfg.threads, 16,
      [&](std::size_t k) {
        Trajectory traj;
        try {
          traj = simulate(cfg.model, inc, gen, cfg.z0, cfg.e0, sim, cfg.seed, k);
        } catch (const Error& err) {
          detail::rethrow_with_path(err, k);
        }
        SummaryObserver obs(cfg.model, sim.horizon, burn_in, ens.slope_window);
        for (const auto& s : traj.samples) obs(s);
        return PathOutput{trajectory_csv(traj.samples), obs.summary(k, traj.outcome)};
      },
      [&](std::size_t k, PathOutput r) {
        out.write(path_file_name(k), r.csv);
        Json s = to_json(r.summary);
        s["file"] = path_file_name(k);
        paths.push_back(s);
      });
  Json j{{"command", "simulate"}, {"seed", cfg.seed}, {"n_paths", cfg.paths}, {"horizon", cfg.horizon},
         {"burn_in", burn_in}, {"paths", paths}};
  out.write_json("simulate_summary.json", j);
  return j;
}

inline Json histogram_json(const OccupationHistogram& h, const TimeWindow& w) {
  const auto& spec = h.spec();
  Json tables = Json::object();
  const char* names[3] = {"S-I", "S-R", "I-R"};
  for (std::size_t k = 0; k < 3; ++k) {
    Json per_regime = Json::array();
    const auto& t = h.pair_table(k);
    for (std::size_t e = 0; e < spec.regimes; ++e) {
      Json rows = Json::array();
      for (std::size_t a = 0; a < spec.bins; ++a) {
        std::vector<double> row(spec.bins);
        for (std::size_t b = 0; b < spec.bins; ++b)
          row[b] = h.total_weight() > 0.0 ? t[(e * spec.bins + a) * spec.bins + b] / h.total_weight() : 0.0;
        rows.push_back(row);
      }
      per_regime.push_back(rows);
    }
    tables[names[k]] = per_regime;
  }
  return {{"window", {w.from, nullable(w.to)}},
          {"total_weight", h.total_weight()},
          {"regime_marginal", h.regime_marginal()},
          {"outside_band_weight", h.outside_band_weight()},
          {"edges", h.edges()},
          {"pair_tables", tables}};
}

/// Ensemble statistics, occupation histograms per window and the TV
/// distances between consecutive windows.
inline Json cmd_ensemble(const RunConfig& cfg) {
  const auto gen = cfg.ctmc();
  const auto inc = cfg.incidence_function();
  const auto pi = stationary_distribution(gen);
  const auto sim = cfg.simulation();
  const auto ens = cfg.ensemble();
  const double burn_in = ens.effective_burn_in(sim.horizon);
  std::vector<TimeWindow> windows = cfg.histogram_windows;
  if (windows.empty()) windows.push_back({burn_in, sim.horizon});
  const auto spec = HistogramSpec::for_model(cfg.model, cfg.histogram_bins);
  const auto res = run_ensemble(cfg.model, inc, gen, cfg.z0, cfg.e0, sim, ens, spec, windows);

  const auto threshold = classify_threshold(cfg.model, inc, pi, cfg.critical_eps,
                                            validate_assumptions(inc, cfg.model, cfg.theta_grid).theta_estimate);
  Json summaries = Json::array();
  double mean_min = INFINITY, mean_max = -INFINITY, mean_sum = 0.0;
  std::size_t above_bound = 0, extinct_final = 0, left_band = 0;
  for (const auto& s : res.summaries) {
    summaries.push_back(to_json(s));
    mean_min = std::min(mean_min, s.time_mean_i);
    mean_max = std::max(mean_max, s.time_mean_i);
    mean_sum += s.time_mean_i;
    if (threshold.persistence_bound && s.time_mean_i > *threshold.persistence_bound) ++above_bound;
    if (s.final_state.i < 1e-4) ++extinct_final;
    if (s.left_band_after_entry) ++left_band;
  }
  const auto occupancy = pooled_occupancy(res.summaries);
  double occ_err = 0.0;
  for (std::size_t e = 0; e < occupancy.size(); ++e) occ_err = std::max(occ_err, std::abs(occupancy[e] - pi[e]));

  Json hist = Json::array();
  for (std::size_t w = 0; w < windows.size(); ++w) hist.push_back(histogram_json(res.histograms[w], windows[w]));
  Json tv = Json::array();
  for (std::size_t w = 0; w + 1 < windows.size(); ++w)
    tv.push_back(tv_distance(res.histograms[w], res.histograms[w + 1]));

  Json j{{"command", "ensemble"},
         {"seed", cfg.seed},
         {"n_paths", cfg.paths},
         {"horizon", cfg.horizon},
         {"burn_in", burn_in},
         {"classification", to_string(threshold.classification)},
         {"r0", threshold.r0},
         {"persistence_bound", threshold.persistence_bound ? Json(*threshold.persistence_bound) : Json(nullptr)},
         {"time_mean_I", {{"min", mean_min}, {"max", mean_max}, {"mean", mean_sum / static_cast<double>(cfg.paths)}}},
         {"paths_above_bound", above_bound},
         {"paths_final_I_below_1e-4", extinct_final},
         {"paths_leaving_band", left_band},
         {"pooled_occupancy", occupancy},
         {"pi", std::vector<double>(pi.pi.data(), pi.pi.data() + pi.pi.size())},
         {"occupancy_max_error", occ_err},
         {"window_tv", tv},
         {"paths", summaries}};
  const OutputDir out(cfg.out);
  out.write_json("ensemble.json", j);
  out.write_json("histograms.json", hist);
  return j;
}

inline Json cmd_check_h(const RunConfig& cfg) {
  if (cfg.model.regimes() < 2)
    throw Error(ErrorKind::unsupported, "condition (H) needs at least two regimes; a single field spans rank 1");
  const auto gen = cfg.ctmc();
  const auto inc = cfg.incidence_function();
  const auto rep = find_condition_h_witness(cfg.model, inc, gen, cfg.check_h_budget, cfg.seed, cfg.check_h_max_depth,
                                            cfg.gamma_options());
  Json words = Json::array();
  for (const auto& w : rep.rank.witness_words) words.push_back(w.to_string());
  Json j{{"command", "check-h"},
         {"status", rep.found ? "found" : "not-found"},
         {"points_examined", rep.points_examined},
         {"budget", cfg.check_h_budget},
         {"max_depth", cfg.check_h_max_depth},
         {"seed", cfg.seed},
         {"gamma_seed", {{"regime", rep.seed.regime + 1}, {"state", to_json(rep.seed.state)}}},
         {"rank", rep.rank.rank},
         {"depth", rep.rank.depth},
         {"witness_words", words},
         {"singular_values", rep.rank.singular_values}};
  if (rep.found) {
    j["point"] = to_json(rep.point);
    j["word"] = to_json(rep.word);
  }
  if (rep.determinant)
    j["determinant"] = {{"closed_form", rep.determinant->closed_form},
                        {"numeric", rep.determinant->numeric},
                        {"scale", rep.determinant->scale}};
  OutputDir(cfg.out).write_json("check_h.json", j);
  return j;
}

inline Json cmd_sample_gamma(const RunConfig& cfg) {
  const auto gen = cfg.ctmc();
  const auto inc = cfg.incidence_function();
  const auto sample = sample_gamma(cfg.model, inc, gen, cfg.gamma_points, cfg.gamma_options(), cfg.seed);
  std::ostringstream csv;
  csv << "S,I,R\n";
  Json words = Json::array();
  for (std::size_t k = 0; k < sample.points.size(); ++k) {
    const auto& z = sample.points[k];
    csv << format_sig10(z.s) << ',' << format_sig10(z.i) << ',' << format_sig10(z.r) << '\n';
    words.push_back(to_json(sample.words[k]));
  }
  const OutputDir out(cfg.out);
  out.write("gamma_points.csv", csv.str());
  Json j{{"command", "sample-gamma"},
         {"seed", cfg.seed},
         {"points", sample.points.size()},
         {"gamma_seed", {{"regime", sample.seed.regime + 1}, {"state", to_json(sample.seed.state)}}},
         {"file", "gamma_points.csv"}};
  Json detail = j;
  detail["words"] = words;
  out.write_json("gamma.json", detail);
  return j;
}

/// Regime path cut at its n-th jump (the orbit ends exactly at that switch).
inline RegimePath path_to_switch(const CtmcGenerator& gen, std::size_t e0, std::size_t switches, RngStream& rng) {
  double horizon = 100.0;
  while (true) {
    RngStream trial = rng;
    RegimePath p = sample_path(gen, e0, horizon, trial);
    if (p.jumps() >= switches) {
      p.jump_times.resize(switches + 1);
      p.states.resize(switches + 1);
      p.horizon = p.jump_times.back();
      rng = trial;
      return p;
    }
    horizon *= 2.0;
  }
}

/// The example bundle: thresholds, E*_1, the 100-day flow check and the
/// data behind the three trajectory figures.
inline Json cmd_reproduce_example(const std::string& out_dir, std::uint64_t seed, std::size_t threads) {
  RunConfig cfg = example_config();
  cfg.out = out_dir;
  cfg.seed = seed;
  cfg.threads = threads;
  const OutputDir out(out_dir);
  const auto gen = cfg.ctmc();
  const auto inc = cfg.incidence_function();
  const auto pi = stationary_distribution(gen);
  const auto threshold = classify_threshold(cfg.model, inc, pi, cfg.critical_eps);
  Json thr = to_json(threshold, pi);
  out.write_json("threshold.json", thr);

  const auto eq = find_equilibrium(cfg.model, inc, 0, cfg.ode);
  const auto quoted = example_quoted_endemic();
  const double eq_gap = std::max({std::abs(eq.state.s - quoted.s), std::abs(eq.state.i - quoted.i),
                                  std::abs(eq.state.r - quoted.r)});
  Json eqj{{"regime", 1},
           {"computed", to_json(eq.state)},
           {"computed_residual", eq.residual},
           {"quoted", to_json(quoted)},
           {"quoted_residual", vector_field(cfg.model, inc, 0, quoted).max_abs()},
           {"max_abs_difference", eq_gap}};
  out.write_json("equilibrium.json", eqj);

  const auto target = example_quoted_flow_target();
  const auto from_quoted = flow(cfg.model, inc, 1, quoted, 100.0, cfg.ode);
  const auto from_computed = flow(cfg.model, inc, 1, eq.state, 100.0, cfg.ode);
  const double flow_gap = std::max({std::abs(from_quoted.s - target.s), std::abs(from_quoted.i - target.i),
                                    std::abs(from_quoted.r - target.r)});
  Json flowj{{"regime", 2},
             {"time", 100.0},
             {"start", to_json(quoted)},
             {"result", to_json(from_quoted)},
             {"result_from_computed_equilibrium", to_json(from_computed)},
             {"expected", to_json(target)},
             {"max_abs_difference", flow_gap},
             {"pass", flow_gap <= 1e-2}};
  out.write_json("flow_check.json", flowj);

  // Figure 1: the two frozen regimes and one switching path from z0 = (50, 1, 0).
  auto sim = cfg.simulation();
  for (std::size_t e = 0; e < 2; ++e) {
    RegimePath frozen{{0.0}, {e}, sim.horizon};
    std::vector<TrajectorySample> samples;
    simulate_on_path(cfg.model, inc, frozen, cfg.z0, sim, [&](const TrajectorySample& s) { samples.push_back(s); });
    out.write(e == 0 ? "fig1a_regime1.csv" : "fig1b_regime2.csv", trajectory_csv(samples));
  }
  const auto fig1c = simulate(cfg.model, inc, gen, cfg.z0, cfg.e0, sim, seed, 0);
  out.write("fig1c_switching.csv", trajectory_csv(fig1c.samples));

  // Figures 2 and 3: one orbit run to its 2000th regime switch.
  RngStream rng(seed, 1);
  const RegimePath orbit_path = path_to_switch(gen, cfg.e0, 2000, rng);
  std::vector<TrajectorySample> orbit;
  simulate_on_path(cfg.model, inc, orbit_path, cfg.z0, sim, [&](const TrajectorySample& s) { orbit.push_back(s); });
  out.write("fig2_orbit.csv", trajectory_csv(orbit));
  const char* proj_names[3] = {"fig3_SI.csv", "fig3_SR.csv", "fig3_IR.csv"};
  const char* proj_heads[3] = {"S,I,regime\n", "S,R,regime\n", "I,R,regime\n"};
  for (std::size_t k = 0; k < 3; ++k) {
    std::ostringstream os;
    os << proj_heads[k];
    const auto [a, b] = OccupationHistogram::pairs[k];
    for (const auto& s : orbit) {
      const auto x = s.z.as_array();
      os << format_sig10(x[static_cast<std::size_t>(a)]) << ',' << format_sig10(x[static_cast<std::size_t>(b)]) << ','
         << (s.regime + 1) << '\n';
    }
    out.write(proj_names[k], os.str());
  }

  Json bundle{{"command", "reproduce-example"},
              {"seed", seed},
              {"r0_per_regime", threshold.r0_per_regime},
              {"r0", threshold.r0},
              {"classification", to_string(threshold.classification)},
              {"endemic_equilibrium_1", to_json(eq.state)},
              {"flow_check_pass", flow_gap <= 1e-2},
              {"orbit_switches", orbit_path.jumps()},
              {"orbit_end_time", orbit_path.horizon},
              {"files",
               {"threshold.json", "equilibrium.json", "flow_check.json", "fig1a_regime1.csv", "fig1b_regime2.csv",
                "fig1c_switching.csv", "fig2_orbit.csv", "fig3_SI.csv", "fig3_SR.csv", "fig3_IR.csv"}}};
  out.write_json("bundle.json", bundle);
  return bundle;
}

}  // namespace rsirs
