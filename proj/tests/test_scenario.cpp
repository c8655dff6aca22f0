#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "mst/scenario.hpp"
#include "mst/verify.hpp"

using namespace mst;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config(const std::string& scenario, const std::string& out_dir) {
  return json{
      {"scenario", scenario},
      {"grid", {{"n_r", 16}, {"n_v", 16}, {"length_r", 1.0}, {"v_max", 6.0}}},
      {"physics", {{"energy", "kinetic"}, {"eta", "boltzmann"}}},
      {"integrator",
       {{"scheme", "rk4"}, {"dt", 1e-3}, {"t_end", 1e-2}, {"stride", 5}}},
      {"out_dir", out_dir},
      {"seed", 7},
  };
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parses and round trips through its own serialization") {
  const json j = base_config("free-transport", "rt_out");
  const ScenarioConfig cfg = parse_config(j);
  CHECK(cfg.scenario == "free-transport");
  CHECK(cfg.grid.n_r == 16);
  CHECK(cfg.integrator.dt == 1e-3);
  CHECK(cfg.seed == 7);

  const json s1 = serialize_config(cfg);
  const json s2 = serialize_config(parse_config(s1));
  CHECK(s1 == s2);
  CHECK(s1.at("physics").at("m") == 1.0);
}

TEST_CASE("config validation names the offending field") {
  json j = base_config("free-transport", "x");
  j.erase("scenario");
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = base_config("no-such-scenario", "x");
  try {
    parse_config(j);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("scenario") != std::string::npos);
  }

  j = base_config("free-transport", "x");
  j["grid"]["n_r"] = 2;
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  j = base_config("free-transport", "x");
  j["typo_field"] = 1;
  try {
    parse_config(j);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("typo_field") != std::string::npos);
  }

  // t_end must land on a whole number of steps
  j = base_config("free-transport", "x");
  j["integrator"]["t_end"] = 1.05e-2 + 1e-4 * 0.5;
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  // dissipative scenarios need a positive rate
  j = base_config("fp-relaxation", "x");
  j["physics"]["lambda"] = 0.0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);

  // the hierarchy needs an energy with hydro derivatives
  j = base_config("pg-hierarchy", "x");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j["physics"]["energy"] = "sackur_tetrode";
  CHECK_NOTHROW(parse_config(j));

  j = base_config("reduced-hydro", "x");
  j["physics"]["energy"] = "sackur_tetrode";
  j["coupling"] = "decoupled";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("config files load with parse errors wrapped") {
  const std::string dir = "scn_cfg";
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/good.json");
    out << base_config("free-transport", dir + "/run").dump(2);
  }
  const ScenarioConfig cfg = load_config_file(dir + "/good.json");
  CHECK(cfg.scenario == "free-transport");

  CHECK_THROWS_AS(load_config_file(dir + "/missing.json"), ConfigError);
  {
    std::ofstream out(dir + "/bad.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_config_file(dir + "/bad.json"), ConfigError);
}

TEST_CASE("free transport scenario runs and writes its artifacts") {
  const std::string dir = "scn_ft";
  fs::remove_all(dir);
  const ScenarioConfig cfg = parse_config(base_config("free-transport", dir));
  const ScenarioOutcome oc = run_scenario(cfg);
  CHECK(oc.exit_code == 0);
  CHECK(oc.summary.at("status") == "ok");
  CHECK(fs::exists(dir + "/summary.json"));
  CHECK(fs::exists(dir + "/diagnostics.csv"));
  CHECK(fs::exists(dir + "/initial_f.csv"));
  CHECK(fs::exists(dir + "/final_f.csv"));

  const json results = oc.summary.at("results");
  CHECK(std::fabs(results.at("number_drift").get<double>()) < 1e-10);
  CHECK(std::fabs(results.at("energy_drift").get<double>()) < 1e-10);
}

TEST_CASE("identical configs produce identical bytes") {
  const std::string dir = "scn_det";
  fs::remove_all(dir);
  const ScenarioConfig cfg = parse_config(base_config("free-transport", dir));
  run_scenario(cfg);
  const std::string sum1 = slurp(dir + "/summary.json");
  const std::string diag1 = slurp(dir + "/diagnostics.csv");
  const std::string fin1 = slurp(dir + "/final_f.csv");

  run_scenario(cfg);
  CHECK(slurp(dir + "/summary.json") == sum1);
  CHECK(slurp(dir + "/diagnostics.csv") == diag1);
  CHECK(slurp(dir + "/final_f.csv") == fin1);
}

TEST_CASE("unstable steps are rejected up front or dumped on blowup") {
  json j = base_config("free-transport", "scn_rej");
  j["integrator"]["dt"] = 0.5;
  j["integrator"]["t_end"] = 5.0;
  CHECK_THROWS_AS(run_scenario(parse_config(j)), ConfigError);

  const std::string dir = "scn_blow";
  fs::remove_all(dir);
  j["integrator"]["override_stability"] = true;
  // enough steps to overflow, probes pushed past the failure point
  j["integrator"]["t_end"] = 50.0;
  j["integrator"]["stride"] = 100;
  j["out_dir"] = dir;
  const ScenarioOutcome oc = run_scenario(parse_config(j));
  CHECK(oc.exit_code == 2);
  CHECK(oc.summary.at("status") == "numerical_failure");
  CHECK(oc.summary.contains("t_last_good"));
  CHECK(fs::exists(dir + "/dump_f.csv"));
}

TEST_CASE("diffusion closure scenario audits its own signs") {
  const std::string dir = "scn_diff";
  fs::remove_all(dir);
  json j = base_config("diffusion-closure", dir);
  j["grid"]["n_r"] = 64;
  j["integrator"]["dt"] = 1e-6;
  j["integrator"]["t_end"] = 1e-4;
  const ScenarioOutcome oc = run_scenario(parse_config(j));
  CHECK(oc.exit_code == 0);
  const json results = oc.summary.at("results");
  CHECK(std::fabs(results.at("mass_drift").get<double>()) < 1e-12);
  CHECK(results.at("min_sigma").get<double>() >= 0.0);
  CHECK(results.at("flux_residual_norm").get<double>() < 1e-10);
  CHECK(results.at("rate_status") == "ok");
}

TEST_CASE("maxent reduce mode sweeps the multiplier grid") {
  const std::string dir = "scn_red";
  fs::remove_all(dir);
  const json j{
      {"mode", "maxent"},
      {"grid", {{"n_r", 4}, {"n_v", 48}, {"length_r", 1.0}, {"v_max", 6.0}}},
      {"physics", {{"energy", "kinetic"}}},
      {"multipliers",
       {{"E_star", {1.0, 1.3}}, {"N_star", {0.0}}}},
  };
  const ScenarioOutcome oc = run_reduce(j, dir);
  CHECK(oc.exit_code == 0);
  CHECK(fs::exists(dir + "/f_hat.csv"));
  CHECK(fs::exists(dir + "/reduction.json"));
  const json red = json::parse(slurp(dir + "/reduction.json"));
  CHECK(red.at("points").size() == 2);
  for (const json& p : red.at("points")) CHECK(p.at("converged") == true);
}

TEST_CASE("flux reduce mode writes the closed flux") {
  const std::string dir = "scn_redflux";
  fs::remove_all(dir);
  const json j{
      {"mode", "flux"},
      {"grid", {{"n_r", 32}, {"n_v", 8}, {"length_r", 1.0}, {"v_max", 4.0}}},
      {"physics", {{"lambda", 0.8}}},
  };
  const ScenarioOutcome oc = run_reduce(j, dir);
  CHECK(oc.exit_code == 0);
  CHECK(fs::exists(dir + "/J_hat.csv"));
  const json sum = json::parse(slurp(dir + "/summary.json"));
  CHECK(sum.at("converged") == true);
  CHECK(sum.at("closure_rel_err").get<double>() < 1e-10);
}

TEST_CASE("reduce mode rejects malformed multiplier arrays") {
  json j{
      {"mode", "maxent"},
      {"grid", {{"n_r", 4}, {"n_v", 16}, {"length_r", 1.0}, {"v_max", 4.0}}},
      {"multipliers", {{"E_star", {1.0, "oops"}}, {"N_star", {0.0}}}},
  };
  try {
    run_reduce(j, "scn_bad");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("E_star") != std::string::npos);
  }

  j["multipliers"]["E_star"] = {1.0, -2.0};
  CHECK_THROWS_AS(run_reduce(j, "scn_bad"), ConfigError);
}

TEST_CASE("verification registry runs and rejects unknown names") {
  const VerifyReport rep =
      run_verify({"grid_quadrature", "bracket_antisymmetry"}, 3);
  CHECK(rep.all_pass);
  CHECK(rep.checks.size() == 2);
  CHECK(rep.checks[0].name == "grid_quadrature");

  const VerifyReport empty = run_verify({}, 3);
  CHECK(empty.all_pass);
  CHECK(empty.checks.empty());
  CHECK(!empty.warning.empty());
  CHECK(empty.to_json().contains("warning"));

  CHECK_THROWS_AS(run_verify({"no_such_check"}, 3), std::invalid_argument);
}

TEST_CASE("injected faults are caught by the structural checks") {
  FaultInjection quad;
  quad.corrupt_quadrature = true;
  const VerifyReport rep1 = run_verify(
      {"grid_quadrature", "integration_by_parts"}, 3, quad);
  CHECK(!rep1.all_pass);

  FaultInjection flip;
  flip.flip_fp_sign = true;
  const VerifyReport rep2 = run_verify({"fp_entropy_production"}, 3, flip);
  CHECK(!rep2.all_pass);
}
