#include "mst/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mst {

double KineticBracket::evaluate(const DistFn& A_f, const DistFn& B_f,
                                const DistFn& f) const {
  require_same_grid(A_f, B_f);
  require_same_grid(A_f, f);
  const DistFn rA = deriv_r(A_f), vA = deriv_v(A_f);
  const DistFn rB = deriv_r(B_f), vB = deriv_v(B_f);
  DistFn integrand(*f.grid);
  for (int k = 0; k < f.size(); ++k)
    integrand.a[k] = f.a[k] * (rA.a[k] * vB.a[k] - rB.a[k] * vA.a[k]);
  return integrate_rv(integrand);
}

DistFn KineticBracket::vector_field(const DistFn& f, const DistFn& E_f) const {
  require_same_grid(f, E_f);
  DistFn out = -1.0 * deriv_r(multiply(f, deriv_v(E_f)));
  axpy(1.0, div_v_flux(multiply(f, deriv_r(E_f))), out);
  return out;
}

DistFn hamiltonian_rhs(const DistFn& f, const Functional& E) {
  KineticBracket br{f.grid};
  return br.vector_field(f, E.derivative(f));
}

template <class FieldT>
FieldT gradient_rhs(const FieldT& x, const DissipationPotentialT<FieldT>& Xi,
                    const FunctionalT<FieldT>& Phi) {
  return -1.0 * Xi.deriv_conjugate(x, Phi.derivative(x));
}

template DistFn gradient_rhs<DistFn>(const DistFn&,
                                     const DissipationPotentialT<DistFn>&,
                                     const FunctionalT<DistFn>&);
template ScalarField gradient_rhs<ScalarField>(
    const ScalarField&, const DissipationPotentialT<ScalarField>&,
    const FunctionalT<ScalarField>&);

DistFn conjugate_field(const DistFn& f, const Functional& E, double E_star,
                       double N_star, const PhysConstants& consts,
                       const PositivityPolicy& policy) {
  const Functional S = boltzmann_entropy(consts, policy);
  const Functional N = number_functional();
  return thermo_potential(S, E, N, E_star, N_star).derivative(f);
}

DistFn fokker_planck_rhs(const DistFn& f, const Functional& E, double lambda,
                         double E_star, double N_star,
                         const PhysConstants& consts,
                         const PositivityPolicy& policy, FpDiagnostics* diag) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("fokker_planck_rhs: lambda must be positive");
  const DistFn fs = conjugate_field(f, E, E_star, N_star, consts, policy);
  const DissipationPotential Xi = velocity_fp_dissipation(lambda);
  DistFn out = -1.0 * Xi.deriv_conjugate(f, fs);

  if (diag) {
    const PhaseGrid& g = *f.grid;
    double wall = 0.0, interior = 0.0;
    for (int i = 0; i < g.n_r; ++i) {
      wall = std::max(
          wall, std::fabs(lambda * f.at(i, 0) * (fs.at(i, 1) - fs.at(i, 0)) / g.dv));
      wall = std::max(
          wall, std::fabs(lambda * f.at(i, g.n_v - 1) *
                          (fs.at(i, g.n_v - 1) - fs.at(i, g.n_v - 2)) / g.dv));
      for (int j = 0; j + 1 < g.n_v; ++j) {
        const double face = lambda * 0.5 * (f.at(i, j) + f.at(i, j + 1)) *
                            (fs.at(i, j + 1) - fs.at(i, j)) / g.dv;
        interior = std::max(interior, std::fabs(face));
      }
    }
    diag->boundary_flux = wall;
    diag->interior_flux_scale = interior;
    diag->boundary_warning = wall > 1e-8 * std::max(interior, 1e-300);
  }
  return out;
}

DistFn generic_rhs(const DistFn& f, const KineticBracket& bracket,
                   const Functional& E,
                   const DissipationPotentialT<DistFn>& Xi,
                   const Functional& Phi) {
  DistFn out = bracket.vector_field(f, E.derivative(f));
  axpy(-1.0, Xi.deriv_conjugate(f, Phi.derivative(f)), out);
  return out;
}

namespace {

template <class StateT>
void rk4_step(StateT& x, const std::function<StateT(const StateT&)>& rhs,
              double dt) {
  const StateT k1 = rhs(x);
  StateT y = x;
  axpy(0.5 * dt, k1, y);
  const StateT k2 = rhs(y);
  y = x;
  axpy(0.5 * dt, k2, y);
  const StateT k3 = rhs(y);
  y = x;
  axpy(dt, k3, y);
  const StateT k4 = rhs(y);
  axpy(dt / 6.0, k1, x);
  axpy(dt / 3.0, k2, x);
  axpy(dt / 3.0, k3, x);
  axpy(dt / 6.0, k4, x);
}

}  // namespace

template <class StateT>
TrajectoryT<StateT> evolve(
    const StateT& x0, const std::function<StateT(const StateT&)>& rhs,
    const Integrator& integ, const std::vector<DiagnosticProbe<StateT>>& probes,
    const std::function<void(double, const StateT&)>& snapshot_hook) {
  if (!(integ.dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
  if (integ.n_steps < 0) throw std::invalid_argument("evolve: n_steps must be nonnegative");
  if (integ.stride < 1) throw std::invalid_argument("evolve: stride must be at least 1");
  if (integ.dt_bound > 0.0 && integ.dt > integ.dt_bound && !integ.override_bound)
    throw std::invalid_argument("evolve: dt " + format_double(integ.dt) +
                                " exceeds the advisory stability bound " +
                                format_double(integ.dt_bound));

  TrajectoryT<StateT> traj;
  traj.diagnostics.header.push_back("t");
  for (const auto& p : probes) traj.diagnostics.header.push_back(p.name);

  StateT x = x0;
  auto record = [&](double t) {
    std::vector<double> row;
    row.reserve(probes.size() + 1);
    row.push_back(t);
    for (const auto& p : probes) row.push_back(p.eval(x));
    traj.diagnostics.append(row);
    if (snapshot_hook) snapshot_hook(t, x);
  };
  record(0.0);

  for (long n = 0; n < integ.n_steps; ++n) {
    StateT prev = x;
    if (integ.scheme == Integrator::Scheme::rk4) {
      rk4_step(x, rhs, integ.dt);
    } else {
      const StateT k1 = rhs(x);
      axpy(integ.dt, k1, x);
    }
    const double t = (n + 1) * integ.dt;
    if (!all_finite(x))
      throw EvolveErrorT<StateT>(
          "evolve: non-finite state at t = " + format_double(t),
          std::move(prev), n * integ.dt, n);
    if ((n + 1) % integ.stride == 0 || n + 1 == integ.n_steps) record(t);
  }
  traj.final_state = std::move(x);
  traj.t_final = integ.n_steps * integ.dt;
  return traj;
}

template TrajectoryT<DistFn> evolve<DistFn>(
    const DistFn&, const std::function<DistFn(const DistFn&)>&,
    const Integrator&, const std::vector<DiagnosticProbe<DistFn>>&,
    const std::function<void(double, const DistFn&)>&);
template TrajectoryT<ScalarField> evolve<ScalarField>(
    const ScalarField&, const std::function<ScalarField(const ScalarField&)>&,
    const Integrator&, const std::vector<DiagnosticProbe<ScalarField>>&,
    const std::function<void(double, const ScalarField&)>&);
template TrajectoryT<ExtendedState> evolve<ExtendedState>(
    const ExtendedState&, const std::function<ExtendedState(const ExtendedState&)>&,
    const Integrator&, const std::vector<DiagnosticProbe<ExtendedState>>&,
    const std::function<void(double, const ExtendedState&)>&);

double rk4_advection_bound(const PhaseGrid& g, double speed_r, double speed_v) {
  const double rate = std::fabs(speed_r) / g.dr + std::fabs(speed_v) / g.dv;
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * std::sqrt(2.0) / rate;
}

}  // namespace mst
