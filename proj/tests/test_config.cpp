#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "rsirs/commands.hpp"
#include "rsirs/config.hpp"

namespace rsirs {
namespace {

Json example_doc() { return to_json(example_config()); }

EnvLookup no_env() {
  return [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
}

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

Error parse_error(const Json& doc) {
  try {
    parse_config(doc, no_env());
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected a config error";
  return Error(ErrorKind::io, "none");
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rsirs_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

TEST(Config, ExampleGeneratorFromLiteralOperands) {
  const auto cfg = parse_config(example_doc(), no_env());
  const Eigen::MatrixXd q = cfg.generator.matrix();
  EXPECT_EQ(q(0, 1), 169.0 * 0.5 / 365.0);
  EXPECT_EQ(cfg.e0, 0u);
}

TEST(Config, RoundTripIsIdentity) {
  for (Json doc : {example_doc(), Json::parse(R"({
        "model": {"Lambda": 1, "mu": 0.02, "lambda": 0, "alpha": 0.1, "delta": 0.3, "betas": [0.01, 0.002, 0.03]},
        "incidence": {"kind": "media2", "c": 0.25, "response": {"family": "exp", "k": 0.3}},
        "generator": {"rates": [[-1, 1, 0], [0, -1, 1], [3, 0, -3]]},
        "initial": {"S": 10, "I": 0.5, "R": 2, "regime": 3},
        "ensemble": {"paths": 7, "burn_in": 12.5},
        "histogram": {"bins": 8, "windows": [[0, 100], [100, 200]]},
        "seed": 18446744073709551615
      })")}) {
    const auto a = parse_config(doc, no_env());
    const auto b = parse_config(to_json(a), no_env());
    EXPECT_TRUE(a == b);
    EXPECT_EQ(to_json(a), to_json(b));
  }
}

TEST(Config, MalformedGeneratorReportsLocation) {
  Json doc = example_doc();
  doc["generator"]["rates"] = {{-169, 169}, {196}};
  auto e = parse_error(doc);
  EXPECT_EQ(e.kind(), ErrorKind::config);
  EXPECT_EQ(e.location(), "/generator/rates/1");

  doc["generator"]["rates"] = {{-1, 2}, {1, -1}};
  e = parse_error(doc);
  EXPECT_EQ(e.location(), "/generator/rates");

  doc["generator"]["rates"] = {{-1, 1}, {"x", 0}};
  e = parse_error(doc);
  EXPECT_EQ(e.location(), "/generator/rates/1/0");
}

TEST(Config, BetaCountMustMatchGenerator) {
  Json doc = example_doc();
  doc["model"]["betas"] = {0.001, 0.002, 0.003};
  EXPECT_EQ(parse_error(doc).location(), "/model/betas");
}

TEST(Config, ValidationErrorsCarryLocations) {
  const std::vector<std::pair<std::function<void(Json&)>, std::string>> cases{
      {[](Json& d) { d["model"]["mu"] = 0; }, "/model"},
      {[](Json& d) { d["model"].erase("delta"); }, "/model/delta"},
      {[](Json& d) { d["model"]["extra"] = 1; }, "/model/extra"},
      {[](Json& d) { d["incidence"] = {{"kind", "weird"}}; }, "/incidence/kind"},
      {[](Json& d) { d["incidence"] = {{"kind", "saturated"}, {"a", -1}}; }, "/incidence"},
      {[](Json& d) { d["ensemble"]["paths"] = 0; }, "/ensemble/paths"},
      {[](Json& d) { d["initial"]["regime"] = 3; }, "/initial/regime"},
      {[](Json& d) { d["initial"]["regime"] = 0; }, "/initial/regime"},
      {[](Json& d) { d["initial"]["I"] = -1; }, "/initial"},
      {[](Json& d) { d["simulation"]["horizon"] = 0; }, "/simulation/horizon"},
      {[](Json& d) { d["ode"]["rel_tol"] = 0; }, "/ode/rel_tol"},
      {[](Json& d) { d["seed"] = -3; }, "/seed"},
      {[](Json& d) { d["threads"] = 0; }, "/threads"},
      {[](Json& d) { d["histogram"]["windows"] = {{5, 1}}; }, "/histogram/windows/0"},
  };
  for (const auto& [mutate, where] : cases) {
    Json doc = example_doc();
    mutate(doc);
    const auto e = parse_error(doc);
    EXPECT_EQ(e.kind(), ErrorKind::config) << where;
    EXPECT_EQ(e.location(), where);
  }
}

TEST(Config, SyntaxErrorIsConfigError) {
  try {
    parse_config_text("{\"model\": [1,", no_env());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_EQ(e.location().rfind("byte ", 0), 0u);
  }
}

TEST(Config, MissingFileIsIoError) {
  try {
    load_config("/nonexistent/rsirs.json", no_env());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_EQ(exit_code_for(e.kind()), 5);
  }
}

TEST(Config, EnvironmentFillsMissingKeysOnly) {
  Json doc = example_doc();
  doc.erase("seed");
  doc.erase("threads");
  doc.erase("ode");
  const auto env = env_of({{"RSIRS_SEED", "99"}, {"RSIRS_THREADS", "3"}, {"RSIRS_ODE_REL_TOL", "1e-7"}, {"RSIRS_OUT", "envdir"}});
  const auto from_env = parse_config(doc, env);
  EXPECT_EQ(from_env.seed, 99u);
  EXPECT_EQ(from_env.threads, 3u);
  EXPECT_EQ(from_env.ode.rel, 1e-7);
  EXPECT_EQ(from_env.out, "out");  // the example document sets "out"

  doc["seed"] = 5;
  doc["ode"] = {{"rel_tol", 1e-9}};
  const auto from_cfg = parse_config(doc, env);
  EXPECT_EQ(from_cfg.seed, 5u);
  EXPECT_EQ(from_cfg.ode.rel, 1e-9);

  doc.erase("out");
  EXPECT_EQ(parse_config(doc, env).out, "envdir");
  EXPECT_EQ(parse_config(doc, no_env()).out, "out");
}

TEST(Config, BadEnvironmentValue) {
  Json doc = example_doc();
  doc.erase("seed");
  try {
    parse_config(doc, env_of({{"RSIRS_SEED", "12abc"}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.location(), "$RSIRS_SEED");
  }
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::config), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::stiffness), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::cannot_seed_gamma), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::io), 5);
}

TEST(Commands, AnalyzeExample) {
  auto cfg = example_config();
  cfg.out = scratch("analyze").string();
  cfg.theta_grid = 100001;
  const Json j = cmd_analyze(cfg);
  EXPECT_NEAR(j["r0"].get<double>(), 1.8726, 1e-3);
  EXPECT_EQ(j["classification"], "persistent");
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(cfg.out) / "analyze.json"));
}

TEST(Commands, AnalyzeSingleRegimeExtinct) {
  auto cfg = example_config();
  cfg.model.betas = {0.0013};
  cfg.generator = {{{0.0}}, 1.0, 1.0};
  cfg.out = scratch("analyze1").string();
  cfg.theta_grid = 1001;
  EXPECT_EQ(cmd_analyze(cfg)["classification"], "extinct");
}

TEST(Commands, SimulateSingleRegimeEqualsFlowTable) {
  auto cfg = example_config();
  cfg.model.betas = {0.0056};
  cfg.generator = {{{0.0}}, 1.0, 1.0};
  cfg.horizon = 50.0;
  cfg.out = scratch("simflow").string();
  cmd_simulate(cfg);
  std::ifstream in(std::filesystem::path(cfg.out) / path_file_name(0));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,S,I,R,regime");
  int rows = 0;
  while (std::getline(in, line)) {
    double t, s, i, r;
    int e;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%d", &t, &s, &i, &r, &e), 5);
    const auto z = flow(cfg.model, cfg.incidence_function(), 0, cfg.z0, t, cfg.ode);
    EXPECT_NEAR(s, z.s, 1e-6);
    EXPECT_NEAR(i, z.i, 1e-6);
    EXPECT_NEAR(r, z.r, 1e-6);
    EXPECT_EQ(e, 1);
    ++rows;
  }
  EXPECT_EQ(rows, 51);
}

TEST(Commands, SimulateIsIdempotentAndThreadInvariant) {
  auto cfg = example_config();
  cfg.horizon = 300.0;
  cfg.paths = 5;
  cfg.seed = 3;
  cfg.out = scratch("sim1").string();
  const Json a = cmd_simulate(cfg);
  auto cfg4 = cfg;
  cfg4.threads = 4;
  cfg4.out = scratch("sim4").string();
  const Json b = cmd_simulate(cfg4);
  EXPECT_EQ(a.dump(), b.dump());
  for (std::size_t k = 0; k < 5; ++k) {
    auto slurp = [](const std::filesystem::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(slurp(std::filesystem::path(cfg.out) / path_file_name(k)),
              slurp(std::filesystem::path(cfg4.out) / path_file_name(k)));
  }
}

TEST(Commands, CheckHOutcomes) {
  auto cfg = example_config();
  cfg.out = scratch("checkh").string();
  const Json found = cmd_check_h(cfg);
  EXPECT_EQ(found["status"], "found");
  EXPECT_NE(found["determinant"]["numeric"].get<double>(), 0.0);

  cfg.model.betas = {0.0056, 0.0056};
  cfg.check_h_budget = 5;
  const Json none = cmd_check_h(cfg);
  EXPECT_EQ(none["status"], "not-found");

  cfg.model.betas = {0.0056};
  cfg.generator = {{{0.0}}, 1.0, 1.0};
  try {
    cmd_check_h(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code_for(e.kind()), 4);
  }

  cfg.model.betas = {0.0013, 0.0013};
  cfg.generator = example_config().generator;
  try {
    cmd_check_h(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::cannot_seed_gamma);
  }
}

TEST(Commands, UnwritableOutputIsIoError) {
  auto cfg = example_config();
  cfg.out = "/proc/rsirs_cannot_write_here";
  cfg.theta_grid = 101;
  try {
    cmd_analyze(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code_for(e.kind()), 5);
  }
}

}  // namespace
}  // namespace rsirs
