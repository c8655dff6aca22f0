// Acceptance gate: every release criterion measured at its stated tolerance,
// one pass/fail line each. Exit 0 only when every line passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mst/dynamics.hpp"
#include "mst/functionals.hpp"
#include "mst/grid.hpp"
#include "mst/poisson_grad.hpp"
#include "mst/reduction.hpp"
#include "mst/scenario.hpp"
#include "mst/verify.hpp"

using namespace mst;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double pi = std::numbers::pi;
int failures = 0;

void record(const std::string& name, bool pass, const std::string& detail) {
  std::printf("%-52s %s  %s\n", name.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

DistFn analytic_maxwellian(const PhaseGrid& g, const PhysConstants& c,
                           double E_star, double N_star) {
  DistFn f(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      f.at(i, j) = std::exp(-(E_star * g.v[j] * g.v[j] / (2.0 * c.m) + N_star) /
                            c.k_B) /
                   c.h;
  return f;
}

Functional quadratic_entropy(const PhaseGrid& g) {
  Functional F;
  F.name = "quadratic_entropy";
  F.value = [](const DistFn& f) { return -0.5 * ip_rv(f, f); };
  F.derivative = [](const DistFn& f) { return -1.0 * f; };
  F.hessian_diag = [&g](const DistFn&) {
    DistFn h(g);
    for (double& x : h.a) x = -1.0;
    return h;
  };
  return F;
}

Functional linear_moment(const DistFn& w, const std::string& name) {
  Functional F;
  F.name = name;
  F.value = [w](const DistFn& f) { return ip_rv(w, f); };
  F.derivative = [w](const DistFn&) { return w; };
  F.hessian_diag = [w](const DistFn&) { return DistFn(*w.grid); };
  return F;
}

EtaFunction eta_neglog() {
  EtaFunction e;
  e.name = "neglog";
  e.eta = [](double f) { return -f * std::log(f); };
  e.d1 = [](double f) { return -std::log(f) - 1.0; };
  e.d2 = [](double f) { return -1.0 / f; };
  return e;
}

ExtendedState random_smooth_state(const PhaseGrid& g, std::uint64_t seed) {
  ExtendedState x(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-0.1, 0.1);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * pi);
  double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng);
  double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
  for (int i = 0; i < g.n_r; ++i) {
    const double th = 2.0 * pi * g.r[i] / g.length_r;
    x.rho[i] = 1.0 + a1 * std::cos(th + p1);
    x.u[i] = a2 * std::sin(th + p2);
    x.s[i] = 1.0 + a3 * std::cos(2.0 * th + p3);
  }
  double a4 = amp(rng), p4 = phase(rng);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      x.f.at(i, j) = 0.4 * (1.0 + a4 * std::cos(2.0 * pi * g.r[i] + p4)) *
                     std::exp(-0.5 * g.v[j] * g.v[j]) / std::sqrt(2.0 * pi);
  return x;
}

// --- criterion runners ------------------------------------------------------

void maxent_maxwellian() {
  const auto t0 = Clock::now();
  const PhaseGrid g(4, 256, 1.0, 8.0);
  const PhysConstants c;
  DistFn x0(g);
  for (double& x : x0.a) x = 0.1;
  const ReductionResult res =
      reduce_static(boltzmann_entropy(c, PositivityPolicy{}), kinetic_energy(c),
                    number_functional(), 1.0, 0.0, x0);
  const DistFn expect = analytic_maxwellian(g, c, 1.0, 0.0);
  double rel = 0.0;
  for (std::size_t k = 0; k < expect.a.size(); ++k)
    rel = std::max(rel, std::fabs(res.minimizer.a[k] - expect.a[k]) / expect.a[k]);
  const double dt = seconds_since(t0);
  record("maxent reduction matches the maxwellian",
         res.converged && rel <= 1e-6,
         fmt("linf rel err %.3e (tol 1e-6)", rel));
  record("maxent reduction runtime", dt < 5.0, fmt("%.2f s (limit 5 s)", dt));
}

void involution() {
  const auto t0 = Clock::now();
  {
    const PhaseGrid g(6, 12, 1.0, 2.0);
    const Functional S = quadratic_entropy(g);
    const Functional E = linear_moment(velocity_field(g), "E");
    DistFn one(g);
    for (double& x : one.a) x = 1.0;
    const InvolutionReport rep = legendre_involution_check(
        S, E, linear_moment(one, "N"), {0.5, 1.0, 1.5}, {-0.4, 0.0, 0.4},
        DistFn(g));
    record("double transform exact on the quadratic entropy",
           rep.max_entropy_err <= 1e-12 && rep.flagged_points == 0,
           fmt("max entropy err %.3e (tol 1e-12)", rep.max_entropy_err));
  }
  {
    const PhaseGrid g(4, 96, 1.0, 8.0);
    const PhysConstants c;
    DistFn x0(g);
    for (double& x : x0.a) x = 0.1;
    const InvolutionReport rep = legendre_involution_check(
        boltzmann_entropy(c, PositivityPolicy{}), kinetic_energy(c),
        number_functional(), {0.7, 0.85, 1.0, 1.2, 1.5},
        {-0.4, -0.2, 0.0, 0.2, 0.4}, x0);
    record("double transform on the ideal-gas relation (5x5)",
           rep.max_entropy_err <= 1e-4 && rep.flagged_points == 0,
           fmt("max entropy err %.3e (tol 1e-4)", rep.max_entropy_err));
  }
  const double dt = seconds_since(t0);
  record("involution runtime", dt < 30.0, fmt("%.2f s (limit 30 s)", dt));
}

struct TransportDrifts {
  double e = 0.0, n = 0.0, f2 = 0.0, flnf = 0.0;
};

TransportDrifts free_transport(int n_v) {
  const PhaseGrid g(128, n_v, 1.0, 6.0);
  const PhysConstants c;
  const Functional E = kinetic_energy(c);
  const Functional N = number_functional();
  const Functional C2 = casimir_functional(eta_square());
  const Functional Cl = casimir_functional(eta_neglog());

  DistFn f0(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      f0.at(i, j) = (1.0 + 0.3 * std::cos(2.0 * pi * g.r[i])) *
                    std::exp(-0.5 * g.v[j] * g.v[j]) / std::sqrt(2.0 * pi);

  Integrator integ;
  integ.dt = 1e-3;
  integ.n_steps = 1000;
  integ.stride = 1000;
  integ.dt_bound = rk4_advection_bound(g, g.v_max / c.m, 0.0);
  const auto rhs = [&E](const DistFn& f) { return hamiltonian_rhs(f, E); };
  const TrajectoryT<DistFn> traj = evolve<DistFn>(f0, rhs, integ);

  TransportDrifts d;
  d.e = std::fabs(E.value(traj.final_state) - E.value(f0)) / std::fabs(E.value(f0));
  d.n = std::fabs(N.value(traj.final_state) - N.value(f0)) / std::fabs(N.value(f0));
  d.f2 = std::fabs(C2.value(traj.final_state) - C2.value(f0)) /
         std::fabs(C2.value(f0));
  d.flnf = std::fabs(Cl.value(traj.final_state) - Cl.value(f0)) /
           std::fabs(Cl.value(f0));
  return d;
}

void hamiltonian_conservation() {
  const TransportDrifts base = free_transport(128);
  record("free transport energy drift (128x128, 1000 rk4 steps)",
         base.e <= 1e-8, fmt("rel drift %.3e (tol 1e-8)", base.e));
  record("free transport number drift", base.n <= 1e-8,
         fmt("rel drift %.3e (tol 1e-8)", base.n));
  record("free transport casimir f^2 drift", base.f2 <= 1e-8,
         fmt("rel drift %.3e (tol 1e-8)", base.f2));
  record("free transport casimir -f ln f drift", base.flnf <= 1e-8,
         fmt("rel drift %.3e (tol 1e-8)", base.flnf));

  const TransportDrifts fine = free_transport(256);
  const double ratio_f2 = base.f2 / std::max(fine.f2, 1e-300);
  const double ratio_flnf = base.flnf / std::max(fine.flnf, 1e-300);
  const bool in_range = ratio_f2 >= 3.5 && ratio_f2 <= 4.5 &&
                        ratio_flnf >= 3.5 && ratio_flnf <= 4.5;
  record("halving dv cuts casimir drift by 3.5x-4.5x", in_range,
         fmt("ratio f^2 %.3g, ratio -f ln f %.3g", ratio_f2, ratio_flnf));
}

void fp_relaxation() {
  ScenarioConfig cfg;
  cfg.scenario = "fp-relaxation";
  cfg.grid = {4, 96, 1.0, 8.0};
  cfg.physics.lambda = 1.0;
  cfg.physics.E_star = 1.0;
  cfg.physics.N_star = 0.0;
  cfg.integrator.scheme = "rk4";
  cfg.integrator.dt = 0.012;
  cfg.integrator.t_end = 4.8;
  cfg.integrator.stride = 1;
  cfg.out_dir = "acceptance_out/fp";
  const ScenarioOutcome oc = run_scenario(cfg);
  const auto& res = oc.summary.at("results");

  const double rate_err = res.at("rate_rel_err").get<double>();
  record("fp second moment relaxes at the operator rate", rate_err <= 0.05,
         fmt("fitted %.6g vs analytic %.6g, rel err %.2e (tol 5e-2)",
             res.at("fitted_rate").get<double>(),
             res.at("analytic_rate").get<double>(), rate_err));
  const double min_sigma = res.at("min_sigma").get<double>();
  record("fp entropy production nonnegative at every step", min_sigma >= 0.0,
         fmt("min sigma %.3e", min_sigma));
  const double relax = res.at("relax_linf").get<double>();
  record("fp final state matches the static reduction", relax <= 1e-4,
         fmt("linf gap %.3e (tol 1e-4)", relax));
}

void diffusion_closure() {
  const PhaseGrid g(256, 4, 1.0, 1.0);
  const PhysConstants c;
  const double lambda = 1.0;
  const DensityFunctional S = density_log_entropy(c, PositivityPolicy{});
  ScalarField rho0(g);
  for (int i = 0; i < g.n_r; ++i)
    rho0[i] = 1.0 + 0.5 * std::cos(2.0 * pi * g.r[i]);

  const ScalarField K_dagger = deriv_r(S.derivative(rho0));
  const FluxClosureT<ScalarField> cl = reduce_flux<ScalarField>(
      scalar_flux_entropy_quadratic(lambda), identity_flux_map(), K_dagger,
      ScalarField(g));
  double flux_err = 0.0;
  for (int i = 0; i < g.n_r; ++i)
    flux_err = std::max(flux_err,
                        std::fabs(cl.J_hat[i] + K_dagger[i] / lambda));
  record("closed flux is minus the conjugate gradient over lambda",
         cl.converged && cl.residual_norm <= 1e-10,
         fmt("stationarity residual %.3e (tol 1e-10), flux gap %.3e",
             cl.residual_norm, flux_err));

  const double t_end = 0.1;
  const DiffusionRun run = diffusion_scenario(rho0, S, lambda, t_end, 2e-6);
  ScalarField expect(g);
  const double decay = std::exp(-4.0 * pi * pi * t_end / lambda);
  for (int i = 0; i < g.n_r; ++i)
    expect[i] = 1.0 + 0.5 * decay * std::cos(2.0 * pi * g.r[i]);
  const double l2 = rel_l2_diff(run.rho_final, expect);
  record("closed diffusion matches the heat kernel by t=0.1", l2 <= 1e-3,
         fmt("rel l2 err %.3e (tol 1e-3)", l2));
  record("diffusion mass drift", run.mass_drift <= 1e-12,
         fmt("rel drift %.3e (tol 1e-12)", run.mass_drift));
}

void viscosity() {
  const PhaseGrid g(16, 256, 1.0, 8.0);
  const double lambda = 0.8;
  DistFn f(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      f.at(i, j) = std::exp(-0.5 * g.v[j] * g.v[j]) / std::sqrt(2.0 * pi);
  ScalarField G(g);
  for (int i = 0; i < g.n_r; ++i)
    G[i] = 5e-5 * std::sin(2.0 * pi * g.r[i]);

  const ViscosityResult visc = viscosity_extract(f, lambda, G);
  record("stress closure at the maxwellian fixed point",
         std::fabs(visc.Gamma - 1.0) <= 1e-4 && visc.closure_residual <= 1e-4,
         fmt("Gamma %.8f (tol 1e-4), closure residual %.3e (tol 1e-4)",
             visc.Gamma, visc.closure_residual));
  record("reported viscosity is Gamma over two lambda",
         std::fabs(visc.nu - visc.Gamma / (2.0 * lambda)) == 0.0 &&
             std::fabs(visc.nu - 1.0 / (2.0 * lambda)) <= 1e-4 / (2.0 * lambda),
         fmt("nu %.8f vs 1/(2 lambda) %.8f", visc.nu, 1.0 / (2.0 * lambda)));
}

void hierarchy_structure() {
  const PhaseGrid g(24, 32, 1.0, 6.0);
  const PhysConstants c;
  const StateEnergy E = sackur_tetrode_energy(c);
  const EtaFunction eta = eta_boltzmann(c, PositivityPolicy{});

  double dev = 0.0;
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    const ExtendedState x = random_smooth_state(g, seed);
    const PgRhs dec = pg_rhs(x, E, eta, CouplingMode::decoupled);
    const ExtendedState eu = euler_rhs(x, E);
    dev = std::max({dev, max_abs_diff(dec.rhs.rho, eu.rho),
                    max_abs_diff(dec.rhs.u, eu.u),
                    max_abs_diff(dec.rhs.s, eu.s)});
  }
  record("decoupled hierarchy reproduces the advective rhs bitwise",
         dev == 0.0, fmt("max deviation %.3e (exact zero required)", dev));

  double worst = 0.0;
  for (std::uint64_t seed : {21ull, 22ull}) {
    const ExtendedState x = random_smooth_state(g, seed);
    for (double lambda : {0.5, 1.0})
      for (double eps : {0.6, 1.0}) {
        const EnergyAudit audit = pg_energy_audit(x, E, eta, lambda, eps);
        worst = std::max(worst, audit.mismatch_rel);
      }
  }
  record("regularization leaves the total energy rate unchanged",
         worst <= 1e-8, fmt("max rel mismatch %.3e (tol 1e-8)", worst));

  double sig_min = 0.0;
  for (std::uint64_t seed : {31ull, 32ull, 33ull, 34ull, 35ull}) {
    const ExtendedState x = random_smooth_state(g, seed);
    const PgRhs out = pg_regularized_rhs(x, E, eta, 0.7, 0.8);
    for (int i = 0; i < g.n_r; ++i) sig_min = std::min(sig_min, out.sigma_s[i]);
  }
  record("entropy production density nonnegative on random states",
         sig_min >= 0.0, fmt("min sigma_s %.3e", sig_min));
}

void verification_suite() {
  const auto t0 = Clock::now();
  const VerifyReport rep = run_verify(verify_check_names(), 1);
  const double dt = seconds_since(t0);
  int n_fail = 0;
  for (const CheckResult& c : rep.checks)
    if (!c.pass) ++n_fail;
  record("verification suite all green",
         rep.all_pass,
         fmt("%.0f checks, %.0f failed", double(rep.checks.size()),
             double(n_fail)));
  record("verification suite runtime", dt < 120.0,
         fmt("%.1f s (limit 120 s)", dt));

  FaultInjection flip;
  flip.flip_fp_sign = true;
  const VerifyReport rep_flip = run_verify(verify_check_names(), 1, flip);
  record("injected fp sign flip is caught", !rep_flip.all_pass,
         rep_flip.all_pass ? "no check failed" : "at least one check failed");

  FaultInjection quad;
  quad.corrupt_quadrature = true;
  const VerifyReport rep_quad = run_verify(verify_check_names(), 1, quad);
  record("injected quadrature weight bug is caught", !rep_quad.all_pass,
         rep_quad.all_pass ? "no check failed" : "at least one check failed");
}

}  // namespace

int main() {
  std::filesystem::create_directories("acceptance_out");
  maxent_maxwellian();
  involution();
  hamiltonian_conservation();
  fp_relaxation();
  diffusion_closure();
  viscosity();
  hierarchy_structure();
  verification_suite();

  std::printf("\n%s: %d failing criterion line(s)\n",
              failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", failures);
  return failures == 0 ? 0 : 1;
}
