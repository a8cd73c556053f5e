#pragma once

// RunConfig: JSON ingestion, validation and canonical serialisation.
//
// Environment overrides (used only when the config file omits the key):
//   RSIRS_SEED, RSIRS_THREADS, RSIRS_OUT, RSIRS_ODE_REL_TOL, RSIRS_ODE_ABS_TOL

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rsirs/core_model.hpp"
#include "rsirs/errors.hpp"
#include "rsirs/integrator.hpp"
#include "rsirs/lie_algebra.hpp"
#include "rsirs/markov_chain.hpp"
#include "rsirs/pdmp_sim.hpp"

namespace rsirs {

using Json = nlohmann::json;

struct IncidenceSpec {
  std::string kind = "nonmonotonic";  ///< linear | saturated | nonmonotonic | media1 | media2
  double parameter = 0.001;           ///< a, a, m or c depending on kind
  std::string response = "michaelis";  ///< media2 response family: michaelis | exp
  double response_parameter = 1.0;     ///< h or k

  friend bool operator==(const IncidenceSpec&, const IncidenceSpec&) = default;
};

inline IncidenceFunction build_incidence(const IncidenceSpec& s) {
  if (s.kind == "linear") return IncidenceFunction::linear();
  if (s.kind == "saturated") return IncidenceFunction::saturated(s.parameter);
  if (s.kind == "nonmonotonic") return IncidenceFunction::nonmonotonic(s.parameter);
  if (s.kind == "media1") return IncidenceFunction::media1(s.parameter);
  if (s.kind == "media2") {
    if (!(std::isfinite(s.response_parameter) && s.response_parameter > 0.0))
      throw Error(ErrorKind::invalid_incidence, "media response parameter must be finite and > 0");
    if (s.response == "michaelis") return IncidenceFunction::media2(s.parameter, MediaResponse::michaelis(s.response_parameter));
    if (s.response == "exp") return IncidenceFunction::media2(s.parameter, MediaResponse::exp_saturation(s.response_parameter));
    throw Error(ErrorKind::invalid_incidence, "unknown media response family '" + s.response + "'");
  }
  throw Error(ErrorKind::invalid_incidence, "unknown incidence kind '" + s.kind + "'");
}

/// Q = rates * scale / scale_divisor, kept as separate operands so that
/// literal expressions like (0.5/365)*[[-169,169],[196,-196]] stay exact.
struct GeneratorSpec {
  std::vector<std::vector<double>> rates;
  double scale = 1.0;
  double scale_divisor = 1.0;

  Eigen::MatrixXd matrix() const {
    const auto n = static_cast<Eigen::Index>(rates.size());
    Eigen::MatrixXd q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        q(i, j) = rates[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * scale / scale_divisor;
    return q;
  }

  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct RunConfig {
  ModelParams model;
  IncidenceSpec incidence;
  GeneratorSpec generator;
  EpidemicState z0{50.0, 1.0, 0.0};
  std::size_t e0 = 0;  ///< 0-based; 1-based in JSON

  double horizon = 2000.0;
  double output_dt = 1.0;
  double absorb_threshold = 1e-15;
  OdeTolerances ode{};

  std::size_t paths = 1;
  std::optional<double> burn_in;
  double slope_window = 1000.0;

  std::size_t histogram_bins = 64;
  std::vector<TimeWindow> histogram_windows;

  std::size_t gamma_points = 1000;
  double gamma_mean_word_length = 10.0;
  double gamma_min_duration = 1e-2;
  double gamma_max_duration = 1e2;
  double gamma_radius = 1.0;

  std::size_t check_h_budget = 100;
  std::size_t check_h_max_depth = 3;

  double critical_eps = 1e-9;
  std::size_t theta_grid = 1'000'001;

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out = "out";

  IncidenceFunction incidence_function() const { return build_incidence(incidence); }
  CtmcGenerator ctmc() const { return validate_generator(generator.matrix()); }

  SimulationOptions simulation() const {
    SimulationOptions s;
    s.horizon = horizon;
    s.tol = ode;
    s.output_dt = output_dt;
    s.absorb_threshold = absorb_threshold;
    return s;
  }

  EnsembleOptions ensemble() const {
    EnsembleOptions e;
    e.n_paths = paths;
    e.master_seed = seed;
    e.threads = threads;
    e.burn_in = burn_in;
    e.slope_window = slope_window;
    return e;
  }

  GammaOptions gamma_options() const {
    GammaOptions g;
    g.mean_word_length = gamma_mean_word_length;
    g.min_duration = gamma_min_duration;
    g.max_duration = gamma_max_duration;
    g.tol = ode;
    g.threads = threads;
    return g;
  }
};

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  auto same_windows = [](const std::vector<TimeWindow>& x, const std::vector<TimeWindow>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (x[k].from != y[k].from || x[k].to != y[k].to) return false;
    return true;
  };
  const ModelParams &p = a.model, &q = b.model;
  return p.lambda_in == q.lambda_in && p.mu == q.mu && p.lambda_loss == q.lambda_loss && p.alpha == q.alpha &&
         p.delta == q.delta && p.betas == q.betas && a.incidence == b.incidence && a.generator == b.generator &&
         a.z0 == b.z0 && a.e0 == b.e0 && a.horizon == b.horizon && a.output_dt == b.output_dt &&
         a.absorb_threshold == b.absorb_threshold && a.ode.rel == b.ode.rel && a.ode.abs == b.ode.abs &&
         a.paths == b.paths && a.burn_in == b.burn_in && a.slope_window == b.slope_window &&
         a.histogram_bins == b.histogram_bins && same_windows(a.histogram_windows, b.histogram_windows) &&
         a.gamma_points == b.gamma_points && a.gamma_mean_word_length == b.gamma_mean_word_length &&
         a.gamma_min_duration == b.gamma_min_duration && a.gamma_max_duration == b.gamma_max_duration &&
         a.gamma_radius == b.gamma_radius && a.check_h_budget == b.check_h_budget &&
         a.check_h_max_depth == b.check_h_max_depth && a.critical_eps == b.critical_eps &&
         a.theta_grid == b.theta_grid && a.seed == b.seed && a.threads == b.threads && a.out == b.out;
}

/// Environment lookup; returns nullopt for unset variables.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

namespace detail {

[[noreturn]] inline void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::config, what, where);
}

/// Reads one JSON object, tracking its JSON-pointer path and rejecting unknown keys.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path, std::initializer_list<const char*> allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) config_error(path_.empty() ? "/" : path_, "expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) config_error(at(key), "unknown key '" + key + "'");
    }
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const char* key) const { return j_.contains(key); }
  const Json& raw(const char* key) const { return j_.at(key); }

  double number(const char* key) const {
    if (!has(key)) config_error(at(key), "missing required number");
    return as_number(j_.at(key), at(key));
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::size_t count(const char* key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!is_nonnegative_integer(v)) config_error(at(key), "expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_string()) config_error(at(key), "expected a string");
    return v.get<std::string>();
  }

  ObjectReader child(const char* key, std::initializer_list<const char*> allowed) const {
    return ObjectReader(has(key) ? j_.at(key) : empty(), at(key), allowed);
  }

  static bool is_nonnegative_integer(const Json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  static double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) config_error(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(where, "number is not finite");
    return x;
  }

 private:
  static const Json& empty() {
    static const Json e = Json::object();
    return e;
  }
  const Json& j_;
  std::string path_;
};

inline double env_double(const std::string& name, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) config_error("$" + name, "expected a number");
  return v;
}

inline std::uint64_t env_unsigned(const std::string& name, const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text[0] != '-') v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) config_error("$" + name, "expected an unsigned integer");
  return v;
}

}  // namespace detail

/// Checks everything a run needs; errors carry the JSON pointer of the culprit.
inline void validate_run_config(const RunConfig& c) {
  using detail::config_error;
  auto relocate = [](const char* where, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      config_error(where, e.what());
    }
  };
  relocate("/model", [&] { c.model.validate(); });
  relocate("/incidence", [&] { build_incidence(c.incidence); });
  const std::size_t n = c.generator.rates.size();
  if (n == 0) config_error("/generator/rates", "generator needs at least one row");
  for (std::size_t i = 0; i < n; ++i)
    if (c.generator.rates[i].size() != n)
      config_error("/generator/rates/" + std::to_string(i), "generator must be square: row has " +
                                                                 std::to_string(c.generator.rates[i].size()) +
                                                                 " entries, expected " + std::to_string(n));
  if (!(std::isfinite(c.generator.scale) && c.generator.scale > 0.0))
    config_error("/generator/scale", "scale must be finite and > 0");
  if (!(std::isfinite(c.generator.scale_divisor) && c.generator.scale_divisor > 0.0))
    config_error("/generator/scale_divisor", "scale_divisor must be finite and > 0");
  relocate("/generator/rates", [&] { c.ctmc(); });
  if (n != c.model.betas.size())
    config_error("/model/betas", "betas has " + std::to_string(c.model.betas.size()) + " entries but the generator has " +
                                     std::to_string(n) + " regimes");
  if (!c.z0.is_finite_nonnegative()) config_error("/initial", "initial state must be finite and nonnegative");
  if (c.e0 >= n) config_error("/initial/regime", "initial regime must lie in 1.." + std::to_string(n));
  if (!(c.horizon > 0.0)) config_error("/simulation/horizon", "horizon must be > 0");
  if (!(c.output_dt > 0.0)) config_error("/simulation/output_dt", "output_dt must be > 0");
  if (!(c.absorb_threshold >= 0.0)) config_error("/simulation/absorb_threshold", "absorb_threshold must be >= 0");
  if (!(c.ode.rel > 0.0)) config_error("/ode/rel_tol", "rel_tol must be > 0");
  if (!(c.ode.abs > 0.0)) config_error("/ode/abs_tol", "abs_tol must be > 0");
  if (c.paths == 0) config_error("/ensemble/paths", "paths must be >= 1");
  if (c.burn_in && !(*c.burn_in >= 0.0 && *c.burn_in < c.horizon))
    config_error("/ensemble/burn_in", "burn_in must lie in [0, horizon)");
  if (!(c.slope_window > 0.0)) config_error("/ensemble/slope_window", "slope_window must be > 0");
  if (c.histogram_bins < 2) config_error("/histogram/bins", "bins must be >= 2");
  for (std::size_t k = 0; k < c.histogram_windows.size(); ++k)
    if (!(c.histogram_windows[k].from >= 0.0 && c.histogram_windows[k].to > c.histogram_windows[k].from))
      config_error("/histogram/windows/" + std::to_string(k), "window must satisfy 0 <= from < to");
  if (c.gamma_points == 0) config_error("/gamma/points", "points must be >= 1");
  if (!(c.gamma_mean_word_length >= 0.0)) config_error("/gamma/mean_word_length", "must be >= 0");
  if (!(c.gamma_min_duration > 0.0)) config_error("/gamma/min_duration", "must be > 0");
  if (!(c.gamma_max_duration >= c.gamma_min_duration)) config_error("/gamma/max_duration", "must be >= min_duration");
  if (!(c.gamma_radius >= 0.0)) config_error("/gamma/radius", "must be >= 0");
  if (c.check_h_budget == 0) config_error("/check_h/budget", "budget must be >= 1");
  if (c.check_h_max_depth == 0) config_error("/check_h/max_depth", "max_depth must be >= 1");
  if (!(c.critical_eps >= 0.0)) config_error("/analysis/critical_eps", "must be >= 0");
  if (c.theta_grid < 2) config_error("/analysis/theta_grid", "must be >= 2");
  if (c.threads == 0) config_error("/threads", "threads must be >= 1");
}

/// Parses and validates a config document. Keys present in the document win
/// over environment variables, which win over built-in defaults.
inline RunConfig parse_config(const Json& doc, const EnvLookup& env = process_env) {
  using detail::ObjectReader;
  RunConfig c;
  const ObjectReader root(doc, "", {"model", "incidence", "generator", "initial", "simulation", "ode", "ensemble",
                                    "histogram", "gamma", "check_h", "analysis", "seed", "threads", "out"});

  if (!root.has("model")) detail::config_error("/model", "missing required section");
  const auto model = root.child("model", {"Lambda", "mu", "lambda", "alpha", "delta", "betas"});
  c.model.lambda_in = model.number("Lambda");
  c.model.mu = model.number("mu");
  c.model.lambda_loss = model.number("lambda");
  c.model.alpha = model.number("alpha");
  c.model.delta = model.number("delta");
  if (!model.has("betas") || !model.raw("betas").is_array())
    detail::config_error(model.at("betas"), "expected an array of transmission rates");
  for (std::size_t e = 0; e < model.raw("betas").size(); ++e)
    c.model.betas.push_back(ObjectReader::as_number(model.raw("betas")[e], model.at("betas") + "/" + std::to_string(e)));

  if (!root.has("incidence")) detail::config_error("/incidence", "missing required section");
  const auto inc = root.child("incidence", {"kind", "a", "m", "c", "response"});
  c.incidence.kind = inc.text("kind", "");
  if (c.incidence.kind == "linear") {
    c.incidence.parameter = 0.0;
  } else if (c.incidence.kind == "saturated" || c.incidence.kind == "nonmonotonic") {
    c.incidence.parameter = inc.number("a");
  } else if (c.incidence.kind == "media1") {
    c.incidence.parameter = inc.number("m");
  } else if (c.incidence.kind == "media2") {
    c.incidence.parameter = inc.number("c");
    const auto resp = inc.child("response", {"family", "h", "k"});
    c.incidence.response = resp.text("family", "michaelis");
    if (c.incidence.response == "michaelis") {
      c.incidence.response_parameter = resp.number("h");
    } else if (c.incidence.response == "exp") {
      c.incidence.response_parameter = resp.number("k");
    } else {
      detail::config_error(resp.at("family"), "unknown response family '" + c.incidence.response + "'");
    }
  } else {
    detail::config_error(inc.at("kind"), "unknown incidence kind '" + c.incidence.kind + "'");
  }
  if (c.incidence.kind != "media2") {
    c.incidence.response = "michaelis";
    c.incidence.response_parameter = 1.0;
  }

  if (!root.has("generator")) detail::config_error("/generator", "missing required section");
  const auto gen = root.child("generator", {"rates", "scale", "scale_divisor"});
  if (!gen.has("rates") || !gen.raw("rates").is_array())
    detail::config_error(gen.at("rates"), "expected a row-major array of arrays");
  const Json& rows = gen.raw("rates");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string row_at = gen.at("rates") + "/" + std::to_string(i);
    if (!rows[i].is_array()) detail::config_error(row_at, "expected an array");
    std::vector<double> row;
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      row.push_back(ObjectReader::as_number(rows[i][j], row_at + "/" + std::to_string(j)));
    c.generator.rates.push_back(std::move(row));
  }
  c.generator.scale = gen.number("scale", 1.0);
  c.generator.scale_divisor = gen.number("scale_divisor", 1.0);

  const auto init = root.child("initial", {"S", "I", "R", "regime"});
  c.z0 = {init.number("S", 50.0), init.number("I", 1.0), init.number("R", 0.0)};
  const std::size_t regime = init.count("regime", 1);
  if (regime == 0) detail::config_error(init.at("regime"), "regimes are numbered from 1");
  c.e0 = regime - 1;

  const auto sim = root.child("simulation", {"horizon", "output_dt", "absorb_threshold"});
  c.horizon = sim.number("horizon", c.horizon);
  c.output_dt = sim.number("output_dt", c.output_dt);
  c.absorb_threshold = sim.number("absorb_threshold", c.absorb_threshold);

  const auto ode = root.child("ode", {"rel_tol", "abs_tol"});
  if (auto v = env("RSIRS_ODE_REL_TOL")) c.ode.rel = detail::env_double("RSIRS_ODE_REL_TOL", *v);
  if (auto v = env("RSIRS_ODE_ABS_TOL")) c.ode.abs = detail::env_double("RSIRS_ODE_ABS_TOL", *v);
  c.ode.rel = ode.number("rel_tol", c.ode.rel);
  c.ode.abs = ode.number("abs_tol", c.ode.abs);

  const auto ens = root.child("ensemble", {"paths", "burn_in", "slope_window"});
  c.paths = ens.count("paths", c.paths);
  if (ens.has("burn_in")) c.burn_in = ens.number("burn_in");
  c.slope_window = ens.number("slope_window", c.slope_window);

  const auto hist = root.child("histogram", {"bins", "windows"});
  c.histogram_bins = hist.count("bins", c.histogram_bins);
  if (hist.has("windows")) {
    const Json& ws = hist.raw("windows");
    if (!ws.is_array()) detail::config_error(hist.at("windows"), "expected an array of [from, to] pairs");
    for (std::size_t k = 0; k < ws.size(); ++k) {
      const std::string at = hist.at("windows") + "/" + std::to_string(k);
      if (!ws[k].is_array() || ws[k].size() != 2) detail::config_error(at, "expected [from, to]");
      c.histogram_windows.push_back({ObjectReader::as_number(ws[k][0], at + "/0"), ObjectReader::as_number(ws[k][1], at + "/1")});
    }
  }

  const auto gam = root.child("gamma", {"points", "mean_word_length", "min_duration", "max_duration", "radius"});
  c.gamma_points = gam.count("points", c.gamma_points);
  c.gamma_mean_word_length = gam.number("mean_word_length", c.gamma_mean_word_length);
  c.gamma_min_duration = gam.number("min_duration", c.gamma_min_duration);
  c.gamma_max_duration = gam.number("max_duration", c.gamma_max_duration);
  c.gamma_radius = gam.number("radius", c.gamma_radius);

  const auto chk = root.child("check_h", {"budget", "max_depth"});
  c.check_h_budget = chk.count("budget", c.check_h_budget);
  c.check_h_max_depth = chk.count("max_depth", c.check_h_max_depth);

  const auto ana = root.child("analysis", {"critical_eps", "theta_grid"});
  c.critical_eps = ana.number("critical_eps", c.critical_eps);
  c.theta_grid = ana.count("theta_grid", c.theta_grid);

  if (auto v = env("RSIRS_SEED")) c.seed = detail::env_unsigned("RSIRS_SEED", *v);
  if (auto v = env("RSIRS_THREADS")) c.threads = static_cast<std::size_t>(detail::env_unsigned("RSIRS_THREADS", *v));
  if (auto v = env("RSIRS_OUT")) c.out = *v;
  if (root.has("seed")) {
    if (!ObjectReader::is_nonnegative_integer(root.raw("seed"))) detail::config_error("/seed", "expected an unsigned 64-bit integer");
    c.seed = root.raw("seed").get<std::uint64_t>();
  }
  c.threads = root.count("threads", c.threads);
  c.out = root.text("out", c.out);

  validate_run_config(c);
  return c;
}

inline RunConfig parse_config_text(const std::string& text, const EnvLookup& env = process_env) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::config, e.what(), "byte " + std::to_string(e.byte));
  }
  return parse_config(doc, env);
}

inline RunConfig load_config(const std::string& path, const EnvLookup& env = process_env) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read config file '" + path + "'", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), env);
}

/// Canonical form: every key written, including defaults.
inline Json to_json(const RunConfig& c) {
  Json j;
  j["model"] = {{"Lambda", c.model.lambda_in}, {"mu", c.model.mu},       {"lambda", c.model.lambda_loss},
                {"alpha", c.model.alpha},      {"delta", c.model.delta}, {"betas", c.model.betas}};
  Json inc{{"kind", c.incidence.kind}};
  if (c.incidence.kind == "saturated" || c.incidence.kind == "nonmonotonic") inc["a"] = c.incidence.parameter;
  if (c.incidence.kind == "media1") inc["m"] = c.incidence.parameter;
  if (c.incidence.kind == "media2") {
    inc["c"] = c.incidence.parameter;
    inc["response"] = {{"family", c.incidence.response},
                       {c.incidence.response == "exp" ? "k" : "h", c.incidence.response_parameter}};
  }
  j["incidence"] = inc;
  j["generator"] = {{"rates", c.generator.rates}, {"scale", c.generator.scale}, {"scale_divisor", c.generator.scale_divisor}};
  j["initial"] = {{"S", c.z0.s}, {"I", c.z0.i}, {"R", c.z0.r}, {"regime", c.e0 + 1}};
  j["simulation"] = {{"horizon", c.horizon}, {"output_dt", c.output_dt}, {"absorb_threshold", c.absorb_threshold}};
  j["ode"] = {{"rel_tol", c.ode.rel}, {"abs_tol", c.ode.abs}};
  j["ensemble"] = {{"paths", c.paths}, {"slope_window", c.slope_window}};
  if (c.burn_in) j["ensemble"]["burn_in"] = *c.burn_in;
  Json windows = Json::array();
  for (const auto& w : c.histogram_windows) windows.push_back({w.from, w.to});
  j["histogram"] = {{"bins", c.histogram_bins}, {"windows", windows}};
  j["gamma"] = {{"points", c.gamma_points},
                {"mean_word_length", c.gamma_mean_word_length},
                {"min_duration", c.gamma_min_duration},
                {"max_duration", c.gamma_max_duration},
                {"radius", c.gamma_radius}};
  j["check_h"] = {{"budget", c.check_h_budget}, {"max_depth", c.check_h_max_depth}};
  j["analysis"] = {{"critical_eps", c.critical_eps}, {"theta_grid", c.theta_grid}};
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out;
  return j;
}

/// Machine-readable error report written by the CLI on failure.
inline Json error_report(const Error& e) {
  Json j{{"status", "error"}, {"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
  if (!e.location().empty()) j["location"] = e.location();
  return j;
}

}  // namespace rsirs
