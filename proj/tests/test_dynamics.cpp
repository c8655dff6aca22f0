#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "mst/dynamics.hpp"
#include "mst/functionals.hpp"
#include "mst/grid.hpp"

using namespace mst;

namespace {

constexpr double pi = std::numbers::pi;

DistFn maxwellian_bump(const PhaseGrid& g, double theta, double amp) {
  DistFn f(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      f.at(i, j) = (1.0 + amp * std::cos(2.0 * pi * g.r[i] / g.length_r)) *
                   std::exp(-0.5 * g.v[j] * g.v[j] / theta) /
                   std::sqrt(2.0 * pi * theta);
  return f;
}

}  // namespace

TEST_CASE("kinetic bracket is antisymmetric to the bit") {
  const PhaseGrid g(12, 16, 1.0, 4.0);
  const KineticBracket br{&g};
  const DistFn f = maxwellian_bump(g, 1.0, 0.3);
  const DistFn A = random_direction(f, 3);
  const DistFn B = random_direction(f, 4);
  CHECK(br.evaluate(A, B, f) == -br.evaluate(B, A, f));
  CHECK(br.evaluate(A, A, f) == 0.0);
}

TEST_CASE("hamiltonian vector field conserves mass and pairs to zero energy") {
  const PhaseGrid g(16, 24, 1.0, 5.0);
  const PhysConstants c;
  const Functional E = kinetic_energy(c);
  const DistFn f = maxwellian_bump(g, 1.0, 0.3);
  const DistFn rhs = hamiltonian_rhs(f, E);

  CHECK(std::fabs(integrate_rv(rhs)) < 1e-13);
  // discrete energy conservation: <E_f, X_E(f)> = 0 by skew structure
  CHECK(std::fabs(ip_rv(E.derivative(f), rhs)) < 1e-12);
}

TEST_CASE("free transport reduces to minus v times the r derivative") {
  const PhaseGrid g(24, 12, 1.0, 3.0);
  const PhysConstants c{2.0, 1.0, 1.0};
  const Functional E = kinetic_energy(c);
  const DistFn f = maxwellian_bump(g, 1.0, 0.2);
  const DistFn rhs = hamiltonian_rhs(f, E);
  const DistFn fr = deriv_r(f);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      CHECK(rhs.at(i, j) ==
            doctest::Approx(-g.v[j] / c.m * fr.at(i, j)).epsilon(1e-11));
}

TEST_CASE("conjugate field matches the assembled potential gradient") {
  const PhaseGrid g(8, 16, 1.0, 4.0);
  const PhysConstants c;
  const Functional E = kinetic_energy(c);
  const DistFn f = maxwellian_bump(g, 0.8, 0.2);
  const double E_star = 1.3, N_star = -0.4;

  const DistFn xs = conjugate_field(f, E, E_star, N_star, c);
  const Functional Phi =
      thermo_potential(boltzmann_entropy(c, PositivityPolicy{}), E,
                       number_functional(), E_star, N_star);
  CHECK(max_abs_diff(xs, Phi.derivative(f)) < 1e-13);
}

TEST_CASE("gradient flow decreases the potential") {
  const PhaseGrid g(6, 32, 1.0, 5.0);
  const PhysConstants c;
  const Functional E = kinetic_energy(c);
  const Functional Phi =
      thermo_potential(boltzmann_entropy(c, PositivityPolicy{}), E,
                       number_functional(), 1.0, 0.0);
  const DissipationPotential Xi = velocity_fp_dissipation(0.7);
  const DistFn f = maxwellian_bump(g, 0.5, 0.1);

  const DistFn rhs = gradient_rhs<DistFn>(f, Xi, Phi);
  // sigma = <Phi_f, -rhs> = 2 Xi >= 0, so the flow moves downhill
  CHECK(ip_rv(Phi.derivative(f), rhs) < 0.0);

  const double h = 1e-4;
  DistFn fp = f;
  axpy(h, rhs, fp);
  CHECK(Phi.value(fp) < Phi.value(f));
}

TEST_CASE("fokker planck conserves mass per cell and fixes the maxwellian") {
  const PhaseGrid g(6, 64, 1.0, 7.0);
  const PhysConstants c;
  const Functional E = kinetic_energy(c);
  const double E_star = 1.3, N_star = -0.2, lambda = 0.9;

  const DistFn f = maxwellian_bump(g, 0.4, 0.3);
  FpDiagnostics diag;
  const DistFn rhs = fokker_planck_rhs(f, E, lambda, E_star, N_star, c,
                                       PositivityPolicy{}, &diag);
  for (int i = 0; i < g.n_r; ++i) {
    double col = 0.0;
    for (int j = 0; j < g.n_v; ++j) col += rhs.at(i, j);
    CHECK(std::fabs(col * g.dv) < 1e-12);
  }
  CHECK(diag.interior_flux_scale > 0.0);

  DistFn eq(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      eq.at(i, j) = std::exp(
          -(E_star * g.v[j] * g.v[j] / (2.0 * c.m) + N_star) / c.k_B);
  const DistFn at_eq = fokker_planck_rhs(eq, E, lambda, E_star, N_star, c);
  CHECK(max_abs(at_eq) < 1e-12 * max_abs(eq));
}

TEST_CASE("generic flow is the sum of its two legs") {
  const PhaseGrid g(10, 24, 1.0, 5.0);
  const PhysConstants c;
  const KineticBracket br{&g};
  const Functional E = kinetic_energy(c);
  const Functional Phi =
      thermo_potential(boltzmann_entropy(c, PositivityPolicy{}), E,
                       number_functional(), 1.0, 0.0);
  const DissipationPotential Xi = velocity_fp_dissipation(0.5);
  const DistFn f = maxwellian_bump(g, 0.7, 0.2);

  const DistFn whole = generic_rhs(f, br, E, Xi, Phi);
  const DistFn parts = br.vector_field(f, E.derivative(f)) +
                       gradient_rhs<DistFn>(f, Xi, Phi);
  CHECK(max_abs_diff(whole, parts) == 0.0);
}

TEST_CASE("integrator validates its own inputs") {
  const PhaseGrid g(8, 8, 1.0, 2.0);
  const DistFn f0 = maxwellian_bump(g, 1.0, 0.1);
  const auto rhs = [](const DistFn& f) { return 0.0 * f; };

  Integrator bad;
  bad.dt = 0.0;
  bad.n_steps = 10;
  CHECK_THROWS_AS(evolve<DistFn>(f0, rhs, bad), std::invalid_argument);

  Integrator over;
  over.dt = 1.0;
  over.n_steps = 1;
  over.dt_bound = 0.1;
  CHECK_THROWS_AS(evolve<DistFn>(f0, rhs, over), std::invalid_argument);
  over.override_bound = true;
  CHECK_NOTHROW(evolve<DistFn>(f0, rhs, over));
}

TEST_CASE("integrator logs probes at the stride and at both ends") {
  const PhaseGrid g(8, 8, 1.0, 2.0);
  const DistFn f0 = maxwellian_bump(g, 1.0, 0.1);
  const auto rhs = [](const DistFn& f) { return -1.0 * f; };

  Integrator integ;
  integ.dt = 0.01;
  integ.n_steps = 10;
  integ.stride = 3;
  std::vector<DiagnosticProbe<DistFn>> probes{
      {"mass", [](const DistFn& f) { return integrate_rv(f); }}};
  const TrajectoryT<DistFn> tr = evolve<DistFn>(f0, rhs, integ, probes);

  CHECK(tr.t_final == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(tr.diagnostics.header.size() == 2);
  // rows at steps 0, 3, 6, 9 and the final step
  CHECK(tr.diagnostics.rows.size() == 5);
  const double m0 = integrate_rv(f0);
  CHECK(integrate_rv(tr.final_state) ==
        doctest::Approx(m0 * std::exp(-0.1)).epsilon(1e-8));
}

TEST_CASE("runaway states surface the last finite iterate") {
  const PhaseGrid g(4, 4, 1.0, 1.0);
  DistFn f0(g);
  for (double& x : f0.a) x = 1.0;
  const auto rhs = [](const DistFn& f) { return 1e8 * f; };

  Integrator integ;
  integ.dt = 1.0;
  integ.n_steps = 50;
  bool threw = false;
  try {
    evolve<DistFn>(f0, rhs, integ);
  } catch (const EvolveErrorT<DistFn>& e) {
    threw = true;
    CHECK(all_finite(e.last_good));
    CHECK(e.step < 50);
    CHECK(e.t_last == doctest::Approx(static_cast<double>(e.step)));
  }
  CHECK(threw);
}

TEST_CASE("rk4 advection bound scales with the grid") {
  const PhaseGrid g(64, 32, 1.0, 4.0);
  const double b = rk4_advection_bound(g, 4.0, 0.0);
  CHECK(b == doctest::Approx(2.0 * std::sqrt(2.0) * g.dr / 4.0).epsilon(1e-12));
  const double b2 = rk4_advection_bound(g, 4.0, 2.0);
  CHECK(b2 < b);
}
