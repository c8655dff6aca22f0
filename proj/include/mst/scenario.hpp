// Config-driven scenario execution: JSON configuration, eight runners, CSV
// diagnostics, and summary JSON with conserved-quantity drifts.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "mst/functionals.hpp"
#include "mst/grid.hpp"

namespace mst {

struct GridConfig {
  int n_r = 64;
  int n_v = 64;
  double length_r = 1.0;
  double v_max = 6.0;
};

struct PhysicsConfig {
  std::string energy = "kinetic";  // kinetic | sackur_tetrode | quadratic
  std::string eta = "boltzmann";   // boltzmann | square | identity
  double lambda = 1.0;
  double epsilon = 1.0;
  double E_star = 1.0;
  double N_star = 0.0;
  double m = 1.0;
  double k_B = 1.0;
  double h = 1.0;
  double alpha_hydro = 0.5;
  double alpha_kinetic = 0.5;
};

struct IntegratorConfig {
  std::string scheme = "rk4";  // rk4 | euler
  double dt = 0.0;             // required
  double t_end = 0.0;          // required
  int stride = 1;
  bool override_stability = false;
};

struct ScenarioConfig {
  std::string scenario;
  GridConfig grid;
  PhysicsConfig physics;
  IntegratorConfig integrator;
  std::string coupling = "full";  // full | diagonal | decoupled
  std::string out_dir = "out";
  std::uint64_t seed = 1;
};

// Thrown for malformed configs; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict parse with field-by-field validation; no state is allocated.
ScenarioConfig parse_config(const nlohmann::json& j);
nlohmann::json serialize_config(const ScenarioConfig& cfg);
ScenarioConfig load_config_file(const std::string& path);

struct ScenarioOutcome {
  nlohmann::json summary;
  int exit_code = 0;  // 0 pass, 2 numerical failure
};

// Dispatch on cfg.scenario: free-transport, fp-relaxation, generic-kinetic,
// diffusion-closure, pg-hierarchy, pg-regularized, ce-viscosity,
// reduced-hydro. Writes diagnostics CSV, snapshots, and summary.json into
// cfg.out_dir. A mid-run non-finite state dumps the last good state and
// returns exit code 2.
ScenarioOutcome run_scenario(const ScenarioConfig& cfg);

// MaxEnt and flux-closure reductions with file output; config schema shares
// grid/physics blocks and adds mode plus a multiplier grid.
ScenarioOutcome run_reduce(const nlohmann::json& j, const std::string& out_dir);

// Construct the configured functionals; throws ConfigError for unknown names.
Functional build_kinetic_energy(const PhysicsConfig& p);
StateEnergy build_state_energy(const PhysicsConfig& p);
EtaFunction build_eta(const PhysicsConfig& p);

}  // namespace mst
