// Time evolution engines: Hamiltonian kinetic vector field, gradient flows
// driven by dissipation potentials, their sum, and a fixed-step integrator
// with diagnostics.
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mst/csv_io.hpp"
#include "mst/functionals.hpp"
#include "mst/grid.hpp"

namespace mst {

// Canonical kinetic bracket on (r, v). evaluate is antisymmetric to
// round-off; pairing against eta'(f) vanishes at stencil order.
struct KineticBracket {
  const PhaseGrid* grid = nullptr;

  // {A, B}(f) = int int f (d_r A_f d_v B_f - d_r B_f d_v A_f)
  double evaluate(const DistFn& A_f, const DistFn& B_f, const DistFn& f) const;

  // RHS induced by an energy gradient field:
  // -d_r(f d_v E_f) + d_v(f d_r E_f), both terms in divergence form.
  DistFn vector_field(const DistFn& f, const DistFn& E_f) const;
};

DistFn hamiltonian_rhs(const DistFn& f, const Functional& E);

// Gradient flow x_dot = -Xi_{x*} evaluated at x* = Phi_x.
template <class FieldT>
FieldT gradient_rhs(const FieldT& x, const DissipationPotentialT<FieldT>& Xi,
                    const FunctionalT<FieldT>& Phi);

// Conjugate field of the static reducing potential,
// Phi_f = -S_f + E_star E_f + N_star N_f with Boltzmann S and number N.
DistFn conjugate_field(const DistFn& f, const Functional& E, double E_star,
                       double N_star, const PhysConstants& consts = {},
                       const PositivityPolicy& policy = {});

struct FpDiagnostics {
  double boundary_flux = 0.0;       // largest one-sided wall flux magnitude
  double interior_flux_scale = 0.0; // largest interior face flux magnitude
  bool boundary_warning = false;    // wall flux not negligible: v_max too small
};

// Velocity-space drift-diffusion d_v(lambda f d_v f*) with f* = Phi_f.
// Face fluxes vanish at the v walls, so mass is conserved per spatial cell.
DistFn fokker_planck_rhs(const DistFn& f, const Functional& E, double lambda,
                         double E_star, double N_star,
                         const PhysConstants& consts = {},
                         const PositivityPolicy& policy = {},
                         FpDiagnostics* diag = nullptr);

// Sum of the Hamiltonian vector field for E and the gradient flow for
// (Xi, Phi). The Hamiltonian part pairs to zero against E_f.
DistFn generic_rhs(const DistFn& f, const KineticBracket& bracket,
                   const Functional& E,
                   const DissipationPotentialT<DistFn>& Xi,
                   const Functional& Phi);

// --- integration -------------------------------------------------------------

struct Integrator {
  enum class Scheme { rk4, euler };
  Scheme scheme = Scheme::rk4;
  double dt = 0.0;
  long n_steps = 0;
  int stride = 1;              // diagnostics row every this many steps
  double dt_bound = 0.0;       // advisory stability bound, 0 disables the check
  bool override_bound = false;
};

template <class StateT>
struct DiagnosticProbe {
  std::string name;
  std::function<double(const StateT&)> eval;
};

template <class StateT>
struct TrajectoryT {
  CsvTable diagnostics;  // t plus one column per probe
  StateT final_state;
  double t_final = 0.0;
};

// Thrown when the state stops being finite; carries the last good state.
template <class StateT>
struct EvolveErrorT : std::runtime_error {
  StateT last_good;
  double t_last = 0.0;
  long step = 0;
  EvolveErrorT(const std::string& msg, StateT x, double t, long n)
      : std::runtime_error(msg), last_good(std::move(x)), t_last(t), step(n) {}
};

template <class StateT>
TrajectoryT<StateT> evolve(
    const StateT& x0, const std::function<StateT(const StateT&)>& rhs,
    const Integrator& integ,
    const std::vector<DiagnosticProbe<StateT>>& probes = {},
    const std::function<void(double, const StateT&)>& snapshot_hook = nullptr);

// Largest stable RK4 step for central-difference advection at the given
// characteristic speeds (imaginary-axis stability radius 2*sqrt(2)).
double rk4_advection_bound(const PhaseGrid& g, double speed_r, double speed_v);

}  // namespace mst
