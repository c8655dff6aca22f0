// Config-driven runners. Each scenario assembles fields and functionals,
// integrates, and writes diagnostics.csv, snapshot CSVs, and summary.json
// into the output directory. Nothing here reads the clock, so reruns of the
// same config are byte-identical.
#include "mst/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "mst/csv_io.hpp"
#include "mst/dynamics.hpp"
#include "mst/poisson_grad.hpp"
#include "mst/reduction.hpp"

namespace fs = std::filesystem;

namespace mst {

using nlohmann::json;

namespace {

// --- config plumbing --------------------------------------------------------

struct JsonReader {
  const json& j;
  std::string path;

  std::string field(const char* key) const {
    return path.empty() ? std::string(key) : path + "." + key;
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool known = false;
      for (const char* k : keys)
        if (it.key() == k) known = true;
      if (!known)
        throw ConfigError("config: unknown field " + field(it.key().c_str()));
    }
  }

  double num(const char* key, double fallback) const {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw ConfigError("config: " + field(key) + " must be a finite number");
    return v.get<double>();
  }

  double num_required(const char* key) const {
    if (!j.contains(key))
      throw ConfigError("config: missing required field " + field(key));
    return num(key, 0.0);
  }

  int integer(const char* key, int fallback) const {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer())
      throw ConfigError("config: " + field(key) + " must be an integer");
    return v.get<int>();
  }

  std::uint64_t uinteger(const char* key, std::uint64_t fallback) const {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError("config: " + field(key) +
                        " must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::string str(const char* key, const std::string& fallback) const {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string())
      throw ConfigError("config: " + field(key) + " must be a string");
    return v.get<std::string>();
  }

  std::string str_required(const char* key) const {
    if (!j.contains(key))
      throw ConfigError("config: missing required field " + field(key));
    return str(key, "");
  }

  bool boolean(const char* key, bool fallback) const {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean())
      throw ConfigError("config: " + field(key) + " must be a boolean");
    return v.get<bool>();
  }
};

const json& object_block(const json& j, const char* key) {
  const json& b = j.at(key);
  if (!b.is_object())
    throw ConfigError(std::string("config: ") + key + " must be an object");
  return b;
}

void parse_grid_block(const json& j, GridConfig& gc) {
  if (j.contains("grid")) {
    JsonReader r{object_block(j, "grid"), "grid"};
    r.allow_only({"n_r", "n_v", "length_r", "v_max"});
    gc.n_r = r.integer("n_r", gc.n_r);
    gc.n_v = r.integer("n_v", gc.n_v);
    gc.length_r = r.num("length_r", gc.length_r);
    gc.v_max = r.num("v_max", gc.v_max);
  }
  if (gc.n_r < 4) throw ConfigError("config: grid.n_r must be at least 4");
  if (gc.n_v < 4) throw ConfigError("config: grid.n_v must be at least 4");
  if (!(gc.length_r > 0.0))
    throw ConfigError("config: grid.length_r must be positive");
  if (!(gc.v_max > 0.0)) throw ConfigError("config: grid.v_max must be positive");
}

void parse_physics_block(const json& j, PhysicsConfig& pc) {
  if (j.contains("physics")) {
    JsonReader r{object_block(j, "physics"), "physics"};
    r.allow_only({"energy", "eta", "lambda", "epsilon", "E_star", "N_star", "m",
                  "k_B", "h", "alpha_hydro", "alpha_kinetic"});
    pc.energy = r.str("energy", pc.energy);
    pc.eta = r.str("eta", pc.eta);
    pc.lambda = r.num("lambda", pc.lambda);
    pc.epsilon = r.num("epsilon", pc.epsilon);
    pc.E_star = r.num("E_star", pc.E_star);
    pc.N_star = r.num("N_star", pc.N_star);
    pc.m = r.num("m", pc.m);
    pc.k_B = r.num("k_B", pc.k_B);
    pc.h = r.num("h", pc.h);
    pc.alpha_hydro = r.num("alpha_hydro", pc.alpha_hydro);
    pc.alpha_kinetic = r.num("alpha_kinetic", pc.alpha_kinetic);
  }
  static const std::set<std::string> energies = {"kinetic", "sackur_tetrode",
                                                 "quadratic"};
  static const std::set<std::string> etas = {"boltzmann", "square", "identity"};
  if (!energies.count(pc.energy))
    throw ConfigError("config: physics.energy must be one of kinetic, "
                      "sackur_tetrode, quadratic");
  if (!etas.count(pc.eta))
    throw ConfigError(
        "config: physics.eta must be one of boltzmann, square, identity");
  if (pc.lambda < 0.0)
    throw ConfigError("config: physics.lambda must be nonnegative");
  if (!(pc.epsilon > 0.0 && pc.epsilon <= 1.0))
    throw ConfigError("config: physics.epsilon must lie in (0, 1]");
  if (!(pc.E_star > 0.0))
    throw ConfigError("config: physics.E_star must be positive");
  if (!(pc.m > 0.0)) throw ConfigError("config: physics.m must be positive");
  if (!(pc.k_B > 0.0)) throw ConfigError("config: physics.k_B must be positive");
  if (!(pc.h > 0.0)) throw ConfigError("config: physics.h must be positive");
  if (!(pc.alpha_hydro > 0.0))
    throw ConfigError("config: physics.alpha_hydro must be positive");
  if (!(pc.alpha_kinetic > 0.0))
    throw ConfigError("config: physics.alpha_kinetic must be positive");
}

long steps_from(const IntegratorConfig& ic) {
  return std::llround(ic.t_end / ic.dt);
}

void parse_integrator_block(const json& j, IntegratorConfig& ic, bool required) {
  if (j.contains("integrator")) {
    JsonReader r{object_block(j, "integrator"), "integrator"};
    r.allow_only({"scheme", "dt", "t_end", "stride", "override_stability"});
    ic.scheme = r.str("scheme", ic.scheme);
    ic.dt = required ? r.num_required("dt") : r.num("dt", ic.dt);
    ic.t_end = required ? r.num_required("t_end") : r.num("t_end", ic.t_end);
    ic.stride = r.integer("stride", ic.stride);
    ic.override_stability =
        r.boolean("override_stability", ic.override_stability);
  } else if (required) {
    throw ConfigError("config: missing required field integrator");
  }
  if (ic.scheme != "rk4" && ic.scheme != "euler")
    throw ConfigError("config: integrator.scheme must be rk4 or euler");
  if (ic.stride < 1)
    throw ConfigError("config: integrator.stride must be at least 1");
  if (!required && ic.dt == 0.0 && ic.t_end == 0.0) return;
  if (!(ic.dt > 0.0)) throw ConfigError("config: integrator.dt must be positive");
  if (!(ic.t_end > 0.0))
    throw ConfigError("config: integrator.t_end must be positive");
  const long n = steps_from(ic);
  if (n < 1 || std::fabs(static_cast<double>(n) * ic.dt - ic.t_end) >
                   1e-9 * std::max(ic.dt, ic.t_end))
    throw ConfigError(
        "config: integrator.t_end must be a positive integer multiple of "
        "integrator.dt");
}

const std::set<std::string>& scenario_names() {
  static const std::set<std::string> names = {
      "free-transport", "fp-relaxation", "generic-kinetic", "diffusion-closure",
      "pg-hierarchy",   "pg-regularized", "ce-viscosity",    "reduced-hydro"};
  return names;
}

// --- shared scenario pieces -------------------------------------------------

PhysConstants consts_of(const PhysicsConfig& p) {
  PhysConstants c;
  c.m = p.m;
  c.k_B = p.k_B;
  c.h = p.h;
  return c;
}

CouplingMode coupling_of(const std::string& name) {
  if (name == "full") return CouplingMode::full;
  if (name == "diagonal") return CouplingMode::diagonal;
  return CouplingMode::decoupled;
}

ScalarField cosine_profile(const PhaseGrid& g, double base, double amp, int k) {
  ScalarField x(g);
  for (int i = 0; i < g.n_r; ++i)
    x[i] = base + amp * std::cos(2.0 * std::numbers::pi * k * g.r[i] / g.length_r);
  return x;
}

ScalarField sine_profile(const PhaseGrid& g, double amp, int k) {
  ScalarField x(g);
  for (int i = 0; i < g.n_r; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * k * g.r[i] / g.length_r);
  return x;
}

ScalarField uniform_profile(const PhaseGrid& g, double value) {
  ScalarField x(g);
  for (int i = 0; i < g.n_r; ++i) x[i] = value;
  return x;
}

double gauss(double v, double theta) {
  return std::exp(-0.5 * v * v / theta) / std::sqrt(2.0 * std::numbers::pi * theta);
}

DistFn local_maxwellian(const PhaseGrid& g, const ScalarField& n, double theta) {
  DistFn f(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j) f.at(i, j) = n[i] * gauss(g.v[j], theta);
  return f;
}

// Per-cell mass of the stationary state of the velocity drift-diffusion flow,
// (1/h) exp(-N*/k_B) sqrt(2 pi m k_B / E*).
double equilibrium_density(const PhysConstants& c, double E_star, double N_star) {
  return std::exp(-N_star / c.k_B) / c.h *
         std::sqrt(2.0 * std::numbers::pi * c.m * c.k_B / E_star);
}

EtaFunction eta_neglog() {
  EtaFunction e;
  e.name = "neglog";
  e.eta = [](double x) { return -x * std::log(std::max(x, 1e-300)); };
  e.d1 = [](double x) { return -std::log(std::max(x, 1e-300)) - 1.0; };
  e.d2 = [](double x) { return -1.0 / std::max(x, 1e-300); };
  return e;
}

Integrator integrator_from(const IntegratorConfig& ic, double dt_bound) {
  Integrator I;
  I.scheme = ic.scheme == "euler" ? Integrator::Scheme::euler
                                  : Integrator::Scheme::rk4;
  I.dt = ic.dt;
  I.n_steps = steps_from(ic);
  I.stride = ic.stride;
  I.dt_bound = dt_bound;
  I.override_bound = ic.override_stability;
  if (I.dt_bound > 0.0 && !I.override_bound && I.dt > I.dt_bound)
    throw ConfigError("config: integrator.dt " + format_double(I.dt) +
                      " exceeds the stability bound " +
                      format_double(I.dt_bound) +
                      " (set integrator.override_stability to force)");
  return I;
}

std::string out_path(const ScenarioConfig& cfg, const char* name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void write_summary(const std::string& out_dir, const json& summary) {
  const std::string path = (fs::path(out_dir) / "summary.json").string();
  std::ofstream out(path);
  out << summary.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + path);
}

json base_summary(const ScenarioConfig& cfg, double t_final, long n_steps) {
  json s;
  s["scenario"] = cfg.scenario;
  s["status"] = "ok";
  s["config"] = serialize_config(cfg);
  s["t_final"] = t_final;
  s["n_steps"] = n_steps;
  return s;
}

int column_index(const CsvTable& t, const std::string& name) {
  for (std::size_t k = 0; k < t.header.size(); ++k)
    if (t.header[k] == name) return static_cast<int>(k);
  throw std::runtime_error("diagnostics column missing: " + name);
}

double rel_drift(double first, double last) {
  return std::fabs(last - first) / std::max(1.0, std::fabs(first));
}

double column_drift(const CsvTable& t, const std::string& name) {
  const int k = column_index(t, name);
  return rel_drift(t.rows.front()[k], t.rows.back()[k]);
}

double column_min(const CsvTable& t, const std::string& name) {
  const int k = column_index(t, name);
  double m = t.rows.front()[k];
  for (const auto& row : t.rows) m = std::min(m, row[k]);
  return m;
}

// Largest increase between consecutive logged values; monotone decay gives a
// nonpositive result.
double column_max_increase(const CsvTable& t, const std::string& name) {
  const int k = column_index(t, name);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 1; r < t.rows.size(); ++r)
    m = std::max(m, t.rows[r][k] - t.rows[r - 1][k]);
  return t.rows.size() > 1 ? m : 0.0;
}

double column_min_increase(const CsvTable& t, const std::string& name) {
  const int k = column_index(t, name);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t r = 1; r < t.rows.size(); ++r)
    m = std::min(m, t.rows[r][k] - t.rows[r - 1][k]);
  return t.rows.size() > 1 ? m : 0.0;
}

// Least-squares slope of ln|y - target| against t, returned as a decay rate.
double fit_decay_rate(const CsvTable& t, const std::string& ycol, double target,
                      double floor_dev) {
  const int kt = column_index(t, "t");
  const int ky = column_index(t, ycol);
  std::vector<double> ts, ls;
  for (const auto& row : t.rows) {
    const double dev = std::fabs(row[ky] - target);
    if (dev > floor_dev) {
      ts.push_back(row[kt]);
      ls.push_back(std::log(dev));
    }
  }
  if (ts.size() < 3) return 0.0;
  double st = 0, sl = 0, stt = 0, stl = 0;
  const double n = static_cast<double>(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    st += ts[k];
    sl += ls[k];
    stt += ts[k] * ts[k];
    stl += ts[k] * ls[k];
  }
  const double denom = n * stt - st * st;
  if (denom == 0.0) return 0.0;
  return -(n * stl - st * sl) / denom;
}

std::vector<DiagnosticProbe<DistFn>> kinetic_probes(
    const Functional& E, const Functional& N, const Functional& S,
    const Functional& Phi, std::function<double(const DistFn&)> sigma) {
  return {{"E", E.value},
          {"N", N.value},
          {"S", S.value},
          {"Phi", Phi.value},
          {"sigma", std::move(sigma)}};
}

void write_scalar_csv(const std::string& path, const ScalarField& x,
                      const char* name) {
  CsvTable t;
  t.header = {"r", name};
  for (int i = 0; i < x.size(); ++i) t.append({x.grid->r[i], x[i]});
  t.write(path);
}

// --- kinetic scenarios --------------------------------------------------------

ScenarioOutcome run_free_transport(const ScenarioConfig& cfg, const PhaseGrid& g) {
  const PhysConstants c = consts_of(cfg.physics);
  const PositivityPolicy pol;
  const Functional E = kinetic_energy(c, 1.0);
  const Functional S = boltzmann_entropy(c, pol);
  const Functional N = number_functional();
  const Functional Phi =
      thermo_potential(S, E, N, cfg.physics.E_star, cfg.physics.N_star);
  const Functional C2 = casimir_functional(eta_square());
  const Functional Cln = casimir_functional(eta_neglog());

  const double theta = c.k_B * c.m / cfg.physics.E_star;
  const DistFn f0 = local_maxwellian(g, cosine_profile(g, 1.0, 0.3, 1), theta);

  const std::function<DistFn(const DistFn&)> rhs = [&](const DistFn& f) {
    return hamiltonian_rhs(f, E);
  };
  const double bound = rk4_advection_bound(g, g.v_max / c.m, 0.0);
  const Integrator integ = integrator_from(
      cfg.integrator, cfg.integrator.scheme == "rk4" ? bound : 0.0);

  auto probes =
      kinetic_probes(E, N, S, Phi, [](const DistFn&) { return 0.0; });
  probes.push_back({"C_f2", C2.value});
  probes.push_back({"C_flnf", Cln.value});

  write_distfn_csv(out_path(cfg, "initial_f.csv"), f0);
  const auto traj = evolve<DistFn>(f0, rhs, integ, probes);
  write_distfn_csv(out_path(cfg, "final_f.csv"), traj.final_state);
  traj.diagnostics.write(out_path(cfg, "diagnostics.csv"));

  json res;
  res["energy_drift"] = column_drift(traj.diagnostics, "E");
  res["number_drift"] = column_drift(traj.diagnostics, "N");
  res["entropy_drift"] = column_drift(traj.diagnostics, "S");
  res["casimir_f2_drift"] = column_drift(traj.diagnostics, "C_f2");
  res["casimir_flnf_drift"] = column_drift(traj.diagnostics, "C_flnf");
  res["dt_bound"] = bound;

  json summary = base_summary(cfg, traj.t_final, integ.n_steps);
  summary["results"] = res;
  write_summary(cfg.out_dir, summary);
  return {summary, 0};
}

ScenarioOutcome run_fp_relaxation(const ScenarioConfig& cfg, const PhaseGrid& g) {
  const PhysConstants c = consts_of(cfg.physics);
  const PositivityPolicy pol;
  const double lambda = cfg.physics.lambda;
  const double Es = cfg.physics.E_star;
  const double Ns = cfg.physics.N_star;
  const Functional E = kinetic_energy(c, 1.0);
  const Functional S = boltzmann_entropy(c, pol);
  const Functional N = number_functional();
  const Functional Phi = thermo_potential(S, E, N, Es, Ns);
  const DissipationPotential Xi = velocity_fp_dissipation(lambda);

  const double theta_eq = c.k_B * c.m / Es;
  const double n_eq = equilibrium_density(c, Es, Ns);
  const double v0 = std::min(1.5 * std::sqrt(theta_eq), 0.25 * g.v_max);
  const double theta0 = 0.5 * theta_eq;
  DistFn f0(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      f0.at(i, j) =
          0.5 * n_eq * (gauss(g.v[j] - v0, theta0) + gauss(g.v[j] + v0, theta0));

  const std::function<DistFn(const DistFn&)> rhs = [&](const DistFn& f) {
    return fokker_planck_rhs(f, E, lambda, Es, Ns, c, pol);
  };
  const double parab = cfg.integrator.scheme == "rk4" ? 0.65 : 0.45;
  const double bound = parab * g.dv * g.dv / (lambda * c.k_B);
  const Integrator integ = integrator_from(cfg.integrator, bound);

  auto probes = kinetic_probes(E, N, S, Phi, [&](const DistFn& f) {
    return 2.0 * Xi.value(f, conjugate_field(f, E, Es, Ns, c, pol));
  });
  probes.push_back({"m2", [](const DistFn& f) {
                      const DistFn v2f =
                          multiply(velocity_field(*f.grid),
                                   multiply(velocity_field(*f.grid), f));
                      return integrate_rv(v2f) / integrate_rv(f);
                    }});

  write_distfn_csv(out_path(cfg, "initial_f.csv"), f0);
  const auto traj = evolve<DistFn>(f0, rhs, integ, probes);
  write_distfn_csv(out_path(cfg, "final_f.csv"), traj.final_state);
  traj.diagnostics.write(out_path(cfg, "diagnostics.csv"));

  FpDiagnostics fpd;
  fokker_planck_rhs(traj.final_state, E, lambda, Es, Ns, c, pol, &fpd);

  const DistFn f_eq = local_maxwellian(g, uniform_profile(g, n_eq), theta_eq);
  const DistFn v2feq = multiply(velocity_field(g),
                                multiply(velocity_field(g), f_eq));
  const double m2_eq = integrate_rv(v2feq) / integrate_rv(f_eq);
  const int km2 = column_index(traj.diagnostics, "m2");
  const double dev0 = std::fabs(traj.diagnostics.rows.front()[km2] - m2_eq);
  const double fitted = fit_decay_rate(traj.diagnostics, "m2", m2_eq,
                                       std::max(1e-12, 1e-5 * dev0));
  const double analytic = 2.0 * lambda * Es / c.m;

  const ReductionResult red = reduce_static(S, E, N, Es, Ns, traj.final_state);
  const double relax_linf = max_abs_diff(traj.final_state, red.minimizer);

  json res;
  res["fitted_rate"] = fitted;
  res["analytic_rate"] = analytic;
  res["rate_rel_err"] = std::fabs(fitted - analytic) / analytic;
  res["relax_linf"] = relax_linf;
  res["min_sigma"] = column_min(traj.diagnostics, "sigma");
  res["number_drift"] = column_drift(traj.diagnostics, "N");
  res["phi_max_increase"] = column_max_increase(traj.diagnostics, "Phi");
  res["boundary_flux"] = fpd.boundary_flux;
  res["boundary_warning"] = fpd.boundary_warning;
  res["dt_bound"] = bound;

  json summary = base_summary(cfg, traj.t_final, integ.n_steps);
  summary["results"] = res;
  write_summary(cfg.out_dir, summary);
  return {summary, 0};
}

ScenarioOutcome run_generic_kinetic(const ScenarioConfig& cfg,
                                    const PhaseGrid& g) {
  const PhysConstants c = consts_of(cfg.physics);
  const PositivityPolicy pol;
  const double lambda = cfg.physics.lambda;
  const double Es = cfg.physics.E_star;
  const double Ns = cfg.physics.N_star;
  const Functional E = kinetic_energy(c, 1.0);
  const Functional S = boltzmann_entropy(c, pol);
  const Functional N = number_functional();
  const Functional Phi = thermo_potential(S, E, N, Es, Ns);
  const DissipationPotential Xi = velocity_fp_dissipation(lambda);
  const KineticBracket bracket{&g};

  const double theta_eq = c.k_B * c.m / Es;
  const DistFn f0 =
      local_maxwellian(g, cosine_profile(g, 1.0, 0.2, 1), 1.3 * theta_eq);

  const std::function<DistFn(const DistFn&)> rhs = [&](const DistFn& f) {
    return generic_rhs(f, bracket, E, Xi, Phi);
  };
  const double adv = rk4_advection_bound(g, g.v_max / c.m, 0.0);
  const double parab = cfg.integrator.scheme == "rk4" ? 0.65 : 0.45;
  double bound = parab * g.dv * g.dv / (lambda * c.k_B);
  if (cfg.integrator.scheme == "rk4") bound = std::min(bound, adv);
  const Integrator integ = integrator_from(cfg.integrator, bound);

  const auto probes = kinetic_probes(E, N, S, Phi, [&](const DistFn& f) {
    return 2.0 * Xi.value(f, Phi.derivative(f));
  });

  write_distfn_csv(out_path(cfg, "initial_f.csv"), f0);
  const auto traj = evolve<DistFn>(f0, rhs, integ, probes);
  write_distfn_csv(out_path(cfg, "final_f.csv"), traj.final_state);
  traj.diagnostics.write(out_path(cfg, "diagnostics.csv"));

  const DistFn Ef = E.derivative(traj.final_state);
  const double ham_pairing =
      std::fabs(ip_rv(Ef, bracket.vector_field(traj.final_state, Ef))) /
      std::max(1.0, std::fabs(E.value(traj.final_state)));

  json res;
  res["number_drift"] = column_drift(traj.diagnostics, "N");
  res["phi_drop"] = traj.diagnostics.rows.front()[column_index(
                        traj.diagnostics, "Phi")] -
                    traj.diagnostics.rows.back()[column_index(
                        traj.diagnostics, "Phi")];
  res["phi_max_increase"] = column_max_increase(traj.diagnostics, "Phi");
  res["min_sigma"] = column_min(traj.diagnostics, "sigma");
  res["hamiltonian_energy_pairing"] = ham_pairing;
  res["dt_bound"] = bound;

  json summary = base_summary(cfg, traj.t_final, integ.n_steps);
  summary["results"] = res;
  write_summary(cfg.out_dir, summary);
  return {summary, 0};
}

// --- diffusion closure --------------------------------------------------------

ScenarioOutcome run_diffusion_closure(const ScenarioConfig& cfg,
                                      const PhaseGrid& g) {
  const PhysConstants c = consts_of(cfg.physics);
  const PositivityPolicy pol;
  const double lambda = cfg.physics.lambda;
  const DensityFunctional S = density_log_entropy(c, pol);
  const ScalarField rho0 = cosine_profile(g, 1.0, 0.5, 1);

  const ScalarField K_dagger = deriv_r(S.derivative(rho0));
  const auto closure = reduce_flux<ScalarField>(
      scalar_flux_entropy_quadratic(lambda), identity_flux_map(), K_dagger,
      ScalarField(g));
  const ScalarField J_exact = (-1.0 / lambda) * K_dagger;
  const double closure_rel =
      max_abs_diff(closure.J_hat, J_exact) / std::max(1e-300, max_abs(J_exact));

  DiffusionRun run;
  try {
    run = diffusion_scenario(rho0, S, lambda, cfg.integrator.t_end,
                             cfg.integrator.dt, cfg.integrator.stride);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  run.series.write(out_path(cfg, "diagnostics.csv"));
  write_scalar_csv(out_path(cfg, "rho_initial.csv"), rho0, "rho");
  write_scalar_csv(out_path(cfg, "rho_final.csv"), run.rho_final, "rho");

  const EntropyRateReport rate = entropy_rate_diagnostic(run.rho_final, S, lambda);

  json res;
  res["mass_drift"] = run.mass_drift;
  res["min_sigma"] = run.min_sigma;
  res["dt_max"] = run.dt_max;
  res["flux_residual_norm"] = closure.residual_norm;
  res["flux_closure_rel_err"] = closure_rel;
  res["flux_dual_value"] = closure.lower_flux_entropy_value;
  res["entropy_max_decrease"] = -column_min_increase(run.series, "entropy");
  res["rate_ratio"] = rate.ratio;
  res["entropy_rate"] = rate.entropy_rate;
  res["rate_nonnegative"] = rate.nonnegative;
  res["rate_status"] = rate.status;

  json summary = base_summary(cfg, cfg.integrator.t_end, steps_from(cfg.integrator));
  summary["results"] = res;
  write_summary(cfg.out_dir, summary);
  return {summary, 0};
}

// --- moment hierarchy ---------------------------------------------------------

ExtendedState hierarchy_initial_state(const PhaseGrid& g) {
  ExtendedState x(g);
  x.rho = cosine_profile(g, 1.0, 0.2, 1);
  x.u = sine_profile(g, 0.1, 1);
  x.s = cosine_profile(g, 1.0, 0.1, 2);
  x.f = 0.3 * local_maxwellian(g, cosine_profile(g, 1.0, 0.2, 1), 1.0);
  return x;
}

std::vector<DiagnosticProbe<ExtendedState>> hierarchy_probes(
    const StateEnergy& E) {
  return {{"E", E.value},
          {"mass", [](const ExtendedState& x) { return integrate_r(x.rho); }},
          {"momentum", [](const ExtendedState& x) { return integrate_r(x.u); }},
          {"entropy", [](const ExtendedState& x) { return integrate_r(x.s); }},
          {"N_f", [](const ExtendedState& x) { return integrate_rv(x.f); }}};
}

void write_state(const ScenarioConfig& cfg, const char* hydro_name,
                 const char* f_name, const ExtendedState& x) {
  write_hydro_csv(out_path(cfg, hydro_name), x.rho, x.u, x.s);
  write_distfn_csv(out_path(cfg, f_name), x.f);
}

ScenarioOutcome run_pg_hierarchy(const ScenarioConfig& cfg, const PhaseGrid& g) {
  const StateEnergy E = build_state_energy(cfg.physics);
  const EtaFunction eta = build_eta(cfg.physics);
  const CouplingMode mode = coupling_of(cfg.coupling);

  const ExtendedState x0 = hierarchy_initial_state(g);
  const std::function<ExtendedState(const ExtendedState&)> rhs =
      [&](const ExtendedState& x) { return pg_rhs(x, E, eta, mode).rhs; };
  const Integrator integ = integrator_from(cfg.integrator, 0.0);

  write_state(cfg, "initial_hydro.csv", "initial_f.csv", x0);
  const auto traj = evolve<ExtendedState>(x0, rhs, integ, hierarchy_probes(E));
  write_state(cfg, "final_hydro.csv", "final_f.csv", traj.final_state);
  traj.diagnostics.write(out_path(cfg, "diagnostics.csv"));

  const PgRhs final_rhs = pg_rhs(traj.final_state, E, eta, mode);
  const PgRhs dec = pg_rhs(traj.final_state, E, eta, CouplingMode::decoupled);
  const ExtendedState eu = euler_rhs(traj.final_state, E);
  const double dec_dev = std::max(
      {max_abs_diff(dec.rhs.rho, eu.rho), max_abs_diff(dec.rhs.u, eu.u),
       max_abs_diff(dec.rhs.s, eu.s)});

  json res;
  res["mass_drift"] = column_drift(traj.diagnostics, "mass");
  res["momentum_drift"] = column_drift(traj.diagnostics, "momentum");
  res["kinetic_number_drift"] = column_drift(traj.diagnostics, "N_f");
  res["energy_drift"] = column_drift(traj.diagnostics, "E");
  res["entropy_drift"] = column_drift(traj.diagnostics, "entropy");
  res["extra_mass_flux"] = final_rhs.extra_mass_flux;
  res["decoupled_euler_dev"] = dec_dev;
  res["coupling"] = cfg.coupling;

  json summary = base_summary(cfg, traj.t_final, integ.n_steps);
  summary["results"] = res;
  write_summary(cfg.out_dir, summary);
  return {summary, 0};
}

ScenarioOutcome run_pg_regularized(const ScenarioConfig& cfg,
                                   const PhaseGrid& g) {
  const StateEnergy E = build_state_energy(cfg.physics);
  const EtaFunction eta = build_eta(cfg.physics);
  const CouplingMode mode = coupling_of(cfg.coupling);
  const double lambda = cfg.physics.lambda;
  const double epsilon = cfg.physics.epsilon;

  const ExtendedState x0 = hierarchy_initial_state(g);
  const std::function<ExtendedState(const ExtendedState&)> rhs =
      [&](const ExtendedState& x) {
        return pg_regularized_rhs(x, E, eta, lambda, epsilon, mode).rhs;
      };
  const Integrator integ = integrator_from(cfg.integrator, 0.0);

  auto probes = hierarchy_probes(E);
  probes.push_back({"sigma_total", [&](const ExtendedState& x) {
                      return integrate_r(
                          pg_regularized_rhs(x, E, eta, lambda, epsilon, mode)
                              .sigma_s);
                    }});
  probes.push_back({"sigma_min", [&](const ExtendedState& x) {
                      const ScalarField s =
                          pg_regularized_rhs(x, E, eta, lambda, epsilon, mode)
                              .sigma_s;
                      double m = s[0];
                      for (int i = 1; i < s.size(); ++i) m = std::min(m, s[i]);
                      return m;
                    }});

  write_state(cfg, "initial_hydro.csv", "initial_f.csv", x0);
  const auto traj = evolve<ExtendedState>(x0, rhs, integ, probes);
  write_state(cfg, "final_hydro.csv", "final_f.csv", traj.final_state);
  traj.diagnostics.write(out_path(cfg, "diagnostics.csv"));

  const EnergyAudit audit =
      pg_energy_audit(traj.final_state, E, eta, lambda, epsilon);

  json res;
  res["mass_drift"] = column_drift(traj.diagnostics, "mass");
  res["momentum_drift"] = column_drift(traj.diagnostics, "momentum");
  res["kinetic_number_drift"] = column_drift(traj.diagnostics, "N_f");
  res["min_sigma"] = column_min(traj.diagnostics, "sigma_min");
  res["entropy_min_increase"] = column_min_increase(traj.diagnostics, "entropy");
  res["audit_rate_regularized"] = audit.rate_regularized;
  res["audit_rate_advective"] = audit.rate_advective;
  res["audit_mismatch_rel"] = audit.mismatch_rel;
  res["coupling"] = cfg.coupling;

  json summary = base_summary(cfg, traj.t_final, integ.n_steps);
  summary["results"] = res;
  write_summary(cfg.out_dir, summary);
  return {summary, 0};
}

// --- closure extraction ---------------------------------------------------------

ScenarioOutcome run_ce_viscosity(const ScenarioConfig& cfg, const PhaseGrid& g) {
  const PhysConstants c = consts_of(cfg.physics);
  const double lambda = cfg.physics.lambda;
  const double theta_eq = c.k_B * c.m / cfg.physics.E_star;

  const DistFn f = local_maxwellian(g, uniform_profile(g, 1.0), theta_eq);
  const ScalarField G = sine_profile(g, 5e-5, 1);

  const CeFixedPoint fp = ce_fixed_point(f, G, lambda);
  const DistFn rhs_at_fp = ce_zeroth_rhs(f, G, lambda, fp.f_conjugate);
  const ViscosityResult vr = viscosity_extract(f, lambda, G);

  write_distfn_csv(out_path(cfg, "fstar.csv"), fp.f_conjugate);
  write_scalar_csv(out_path(cfg, "u_star_gradient.csv"), G, "G");

  json res;
  res["Gamma"] = vr.Gamma;
  res["nu"] = vr.nu;
  res["closure_residual"] = vr.closure_residual;
  res["face_flux_residual"] = fp.residual;
  res["rhs_residual"] = max_abs(rhs_at_fp);
  res["potential_value"] = ce_potential_value(f, G, lambda, fp.f_conjugate);
  res["gradient_amplitude"] = 5e-5;

  json summary = base_summary(cfg, 0.0, 0);
  summary["results"] = res;
  write_summary(cfg.out_dir, summary);
  return {summary, 0};
}

ScenarioOutcome run_reduced_hydro(const ScenarioConfig& cfg, const PhaseGrid& g) {
  const PhysConstants c = consts_of(cfg.physics);
  const StateEnergy E = build_state_energy(cfg.physics);
  const EtaFunction eta = build_eta(cfg.physics);
  const double lambda = cfg.physics.lambda;
  const CouplingMode mode = coupling_of(cfg.coupling);

  // Local-equilibrium closure: per-cell Maxwellian at the temperature E_s of
  // the current hydrodynamic state.
  const auto surrogate = [&](const ScalarField& rho, const ScalarField& s) {
    ExtendedState xt(g);
    xt.rho = rho;
    xt.s = s;
    const ScalarField T = E.derivative(xt).s;
    DistFn f(g);
    for (int i = 0; i < g.n_r; ++i) {
      const double theta = c.k_B * T[i] / c.m;
      if (!(theta > 0.0))
        throw std::runtime_error(
            "reduced-hydro: nonpositive temperature in closure");
      for (int j = 0; j < g.n_v; ++j)
        f.at(i, j) = 0.5 * rho[i] * gauss(g.v[j], theta);
    }
    return f;
  };

  ExtendedState x0(g);
  x0.rho = cosine_profile(g, 1.0, 0.1, 1);
  x0.u = sine_profile(g, 0.05, 1);
  x0.s = cosine_profile(g, 1.0, 0.05, 2);
  x0.f = surrogate(x0.rho, x0.s);

  const std::function<ExtendedState(const ExtendedState&)> rhs =
      [&](const ExtendedState& x) {
        const ReducedHydroRhs rr = reduced_hydro_rhs(
            x.rho, x.u, x.s, surrogate(x.rho, x.s), E, eta, lambda, mode);
        ExtendedState out(g);
        out.rho = rr.rho_dot;
        out.u = rr.u_dot;
        out.s = rr.s_dot;
        return out;
      };
  const Integrator integ = integrator_from(cfg.integrator, 0.0);

  const auto probe_rr = [&](const ExtendedState& x) {
    return reduced_hydro_rhs(x.rho, x.u, x.s, surrogate(x.rho, x.s), E, eta,
                             lambda, mode);
  };
  std::vector<DiagnosticProbe<ExtendedState>> probes = {
      {"mass", [](const ExtendedState& x) { return integrate_r(x.rho); }},
      {"momentum", [](const ExtendedState& x) { return integrate_r(x.u); }},
      {"entropy", [](const ExtendedState& x) { return integrate_r(x.s); }},
      {"sigma_total",
       [&](const ExtendedState& x) { return integrate_r(probe_rr(x).sigma_s); }},
      {"sigma_min",
       [&](const ExtendedState& x) {
         const ScalarField s = probe_rr(x).sigma_s;
         double m = s[0];
         for (int i = 1; i < s.size(); ++i) m = std::min(m, s[i]);
         return m;
       }},
      {"nu_min", [&](const ExtendedState& x) {
         const ScalarField nu = probe_rr(x).nu_field;
         double m = nu[0];
         for (int i = 1; i < nu.size(); ++i) m = std::min(m, nu[i]);
         return m;
       }}};

  write_state(cfg, "initial_hydro.csv", "initial_f.csv", x0);
  const auto traj = evolve<ExtendedState>(x0, rhs, integ, probes);
  write_state(cfg, "final_hydro.csv", "final_f.csv", traj.final_state);
  traj.diagnostics.write(out_path(cfg, "diagnostics.csv"));

  const ReducedHydroRhs rr_final = probe_rr(traj.final_state);

  json res;
  res["mass_drift"] = column_drift(traj.diagnostics, "mass");
  res["momentum_drift"] = column_drift(traj.diagnostics, "momentum");
  res["entropy_min_increase"] = column_min_increase(traj.diagnostics, "entropy");
  res["min_sigma"] = column_min(traj.diagnostics, "sigma_min");
  res["min_nu"] = column_min(traj.diagnostics, "nu_min");
  res["entropy_flux_final_max"] = max_abs(rr_final.J_s);
  res["coupling"] = cfg.coupling;

  json summary = base_summary(cfg, traj.t_final, integ.n_steps);
  summary["results"] = res;
  write_summary(cfg.out_dir, summary);
  return {summary, 0};
}

}  // namespace

// --- public entry points ------------------------------------------------------

ScenarioConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: root must be a JSON object");
  JsonReader root{j, ""};
  root.allow_only(
      {"scenario", "grid", "physics", "integrator", "coupling", "out_dir",
       "seed"});

  ScenarioConfig cfg;
  cfg.scenario = root.str_required("scenario");
  if (!scenario_names().count(cfg.scenario))
    throw ConfigError("config: unknown scenario '" + cfg.scenario + "'");

  parse_grid_block(j, cfg.grid);
  parse_physics_block(j, cfg.physics);
  const bool needs_time = cfg.scenario != "ce-viscosity";
  parse_integrator_block(j, cfg.integrator, needs_time);

  cfg.coupling = root.str("coupling", cfg.coupling);
  if (cfg.coupling != "full" && cfg.coupling != "diagonal" &&
      cfg.coupling != "decoupled")
    throw ConfigError(
        "config: coupling must be one of full, diagonal, decoupled");
  cfg.out_dir = root.str("out_dir", cfg.out_dir);
  if (cfg.out_dir.empty())
    throw ConfigError("config: out_dir must be a nonempty string");
  cfg.seed = root.uinteger("seed", cfg.seed);

  static const std::set<std::string> needs_lambda = {
      "fp-relaxation",  "generic-kinetic", "diffusion-closure",
      "pg-regularized", "ce-viscosity",    "reduced-hydro"};
  if (needs_lambda.count(cfg.scenario) && !(cfg.physics.lambda > 0.0))
    throw ConfigError("config: physics.lambda must be positive for scenario " +
                      cfg.scenario);

  static const std::set<std::string> needs_state_energy = {
      "pg-hierarchy", "pg-regularized", "reduced-hydro"};
  if (needs_state_energy.count(cfg.scenario) && cfg.physics.energy == "kinetic")
    throw ConfigError(
        "config: physics.energy must be sackur_tetrode or quadratic for "
        "scenario " +
        cfg.scenario);

  if (cfg.scenario == "reduced-hydro" && cfg.coupling == "decoupled")
    throw ConfigError(
        "config: coupling must be full or diagonal for scenario reduced-hydro");

  return cfg;
}

json serialize_config(const ScenarioConfig& cfg) {
  json j;
  j["scenario"] = cfg.scenario;
  j["grid"] = {{"n_r", cfg.grid.n_r},
               {"n_v", cfg.grid.n_v},
               {"length_r", cfg.grid.length_r},
               {"v_max", cfg.grid.v_max}};
  j["physics"] = {{"energy", cfg.physics.energy},
                  {"eta", cfg.physics.eta},
                  {"lambda", cfg.physics.lambda},
                  {"epsilon", cfg.physics.epsilon},
                  {"E_star", cfg.physics.E_star},
                  {"N_star", cfg.physics.N_star},
                  {"m", cfg.physics.m},
                  {"k_B", cfg.physics.k_B},
                  {"h", cfg.physics.h},
                  {"alpha_hydro", cfg.physics.alpha_hydro},
                  {"alpha_kinetic", cfg.physics.alpha_kinetic}};
  j["integrator"] = {{"scheme", cfg.integrator.scheme},
                     {"dt", cfg.integrator.dt},
                     {"t_end", cfg.integrator.t_end},
                     {"stride", cfg.integrator.stride},
                     {"override_stability", cfg.integrator.override_stability}};
  j["coupling"] = cfg.coupling;
  j["out_dir"] = cfg.out_dir;
  j["seed"] = cfg.seed;
  return j;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

Functional build_kinetic_energy(const PhysicsConfig& p) {
  return kinetic_energy(consts_of(p), 1.0);
}

StateEnergy build_state_energy(const PhysicsConfig& p) {
  if (p.energy == "sackur_tetrode")
    return sackur_tetrode_energy(consts_of(p), p.alpha_hydro, p.alpha_kinetic);
  if (p.energy == "quadratic")
    return quadratic_state_energy(consts_of(p), 1.0, 1.0, p.alpha_kinetic);
  throw ConfigError("config: physics.energy '" + p.energy +
                    "' has no hydrodynamic part");
}

EtaFunction build_eta(const PhysicsConfig& p) {
  if (p.eta == "boltzmann") return eta_boltzmann(consts_of(p), {});
  if (p.eta == "square") return eta_square();
  if (p.eta == "identity") return eta_identity();
  throw ConfigError("config: unknown physics.eta '" + p.eta + "'");
}

ScenarioOutcome run_scenario(const ScenarioConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const PhaseGrid g(cfg.grid.n_r, cfg.grid.n_v, cfg.grid.length_r,
                    cfg.grid.v_max);
  try {
    if (cfg.scenario == "free-transport") return run_free_transport(cfg, g);
    if (cfg.scenario == "fp-relaxation") return run_fp_relaxation(cfg, g);
    if (cfg.scenario == "generic-kinetic") return run_generic_kinetic(cfg, g);
    if (cfg.scenario == "diffusion-closure")
      return run_diffusion_closure(cfg, g);
    if (cfg.scenario == "pg-hierarchy") return run_pg_hierarchy(cfg, g);
    if (cfg.scenario == "pg-regularized") return run_pg_regularized(cfg, g);
    if (cfg.scenario == "ce-viscosity") return run_ce_viscosity(cfg, g);
    if (cfg.scenario == "reduced-hydro") return run_reduced_hydro(cfg, g);
    throw ConfigError("config: unknown scenario '" + cfg.scenario + "'");
  } catch (const EvolveErrorT<DistFn>& e) {
    write_distfn_csv(out_path(cfg, "dump_f.csv"), e.last_good);
    json summary;
    summary["scenario"] = cfg.scenario;
    summary["status"] = "numerical_failure";
    summary["error"] = e.what();
    summary["t_last_good"] = e.t_last;
    summary["failed_step"] = e.step;
    summary["config"] = serialize_config(cfg);
    write_summary(cfg.out_dir, summary);
    return {summary, 2};
  } catch (const EvolveErrorT<ExtendedState>& e) {
    write_hydro_csv(out_path(cfg, "dump_hydro.csv"), e.last_good.rho,
                    e.last_good.u, e.last_good.s);
    write_distfn_csv(out_path(cfg, "dump_f.csv"), e.last_good.f);
    json summary;
    summary["scenario"] = cfg.scenario;
    summary["status"] = "numerical_failure";
    summary["error"] = e.what();
    summary["t_last_good"] = e.t_last;
    summary["failed_step"] = e.step;
    summary["config"] = serialize_config(cfg);
    write_summary(cfg.out_dir, summary);
    return {summary, 2};
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    json summary;
    summary["scenario"] = cfg.scenario;
    summary["status"] = "numerical_failure";
    summary["error"] = e.what();
    summary["config"] = serialize_config(cfg);
    write_summary(cfg.out_dir, summary);
    return {summary, 2};
  }
}

// --- one-shot reductions --------------------------------------------------------

namespace {

std::vector<double> multiplier_array(const json& block, const char* key,
                                     bool require_positive) {
  if (!block.contains(key))
    throw ConfigError(std::string("config: missing required field multipliers.") +
                      key);
  const json& arr = block.at(key);
  if (!arr.is_array() || arr.empty())
    throw ConfigError(std::string("config: multipliers.") + key +
                      " must be a nonempty array");
  std::vector<double> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const json& v = arr[k];
    const std::string name =
        std::string("multipliers.") + key + "[" + std::to_string(k) + "]";
    if (!v.is_number() || !std::isfinite(v.get<double>()))
      throw ConfigError("config: " + name + " must be a finite number");
    const double x = v.get<double>();
    if (require_positive && !(x > 0.0))
      throw ConfigError("config: " + name + " must be positive");
    out.push_back(x);
  }
  return out;
}

}  // namespace

ScenarioOutcome run_reduce(const json& j, const std::string& out_dir) {
  if (!j.is_object()) throw ConfigError("config: root must be a JSON object");
  JsonReader root{j, ""};
  root.allow_only({"mode", "grid", "physics", "multipliers"});
  const std::string mode = root.str_required("mode");
  if (mode != "maxent" && mode != "flux")
    throw ConfigError("config: mode must be 'maxent' or 'flux'");

  GridConfig gc;
  PhysicsConfig pc;
  parse_grid_block(j, gc);
  parse_physics_block(j, pc);

  std::vector<double> E_stars, N_stars;
  if (mode == "maxent") {
    if (!j.contains("multipliers"))
      throw ConfigError("config: missing required field multipliers");
    const json& block = object_block(j, "multipliers");
    JsonReader r{block, "multipliers"};
    r.allow_only({"E_star", "N_star"});
    E_stars = multiplier_array(block, "E_star", true);
    N_stars = multiplier_array(block, "N_star", false);
  } else if (!(pc.lambda > 0.0)) {
    throw ConfigError("config: physics.lambda must be positive for flux mode");
  }

  fs::create_directories(out_dir);
  const PhaseGrid g(gc.n_r, gc.n_v, gc.length_r, gc.v_max);
  const PhysConstants c = consts_of(pc);
  const PositivityPolicy pol;

  json summary;
  summary["mode"] = mode;
  int exit_code = 0;

  if (mode == "maxent") {
    const Functional S = boltzmann_entropy(c, pol);
    const Functional E = kinetic_energy(c, 1.0);
    const Functional N = number_functional();

    json points = json::array();
    bool wrote_minimizer = false;
    for (const double a : E_stars)
      for (const double b : N_stars) {
        const double theta = c.k_B * c.m / a;
        const DistFn x0 = local_maxwellian(
            g, uniform_profile(g, equilibrium_density(c, a, b)), theta);
        json p;
        p["E_star"] = a;
        p["N_star"] = b;
        try {
          const ReductionResult red = reduce_static(S, E, N, a, b, x0);
          p["S_star"] = red.dual_value;
          p["E_moment"] = E.value(red.minimizer);
          p["N_moment"] = N.value(red.minimizer);
          p["iterations"] = red.iterations;
          p["residual_norm"] = red.residual_norm;
          p["converged"] = red.converged;
          if (!wrote_minimizer) {
            write_distfn_csv((fs::path(out_dir) / "f_hat.csv").string(),
                             red.minimizer);
            wrote_minimizer = true;
          }
        } catch (const ReductionErrorT<DistFn>& e) {
          p["converged"] = false;
          p["error"] = e.what();
          p["residual_norm"] = e.best.residual_norm;
          exit_code = 2;
        }
        points.push_back(p);
      }
    summary["points"] = points;
    std::ofstream out((fs::path(out_dir) / "reduction.json").string());
    out << summary.dump(2) << "\n";
  } else {
    const DensityFunctional S = density_log_entropy(c, pol);
    const ScalarField rho0 = cosine_profile(g, 1.0, 0.5, 1);
    const ScalarField K_dagger = deriv_r(S.derivative(rho0));
    const auto closure = reduce_flux<ScalarField>(
        scalar_flux_entropy_quadratic(pc.lambda), identity_flux_map(), K_dagger,
        ScalarField(g));
    const ScalarField J_exact = (-1.0 / pc.lambda) * K_dagger;

    CsvTable t;
    t.header = {"r", "J", "K"};
    for (int i = 0; i < g.n_r; ++i)
      t.append({g.r[i], closure.J_hat[i], closure.K_reduced[i]});
    t.write((fs::path(out_dir) / "J_hat.csv").string());

    summary["dual_value"] = closure.lower_flux_entropy_value;
    summary["residual_norm"] = closure.residual_norm;
    summary["iterations"] = closure.iterations;
    summary["converged"] = closure.converged;
    summary["closure_rel_err"] = max_abs_diff(closure.J_hat, J_exact) /
                                 std::max(1e-300, max_abs(J_exact));
    if (!closure.converged) exit_code = 2;
    std::ofstream out((fs::path(out_dir) / "flux.json").string());
    out << summary.dump(2) << "\n";
  }

  write_summary(out_dir, summary);
  return {summary, exit_code};
}

}  // namespace mst
