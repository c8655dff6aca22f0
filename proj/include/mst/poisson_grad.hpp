// Coupled evolution of (rho, u, s, f): the hierarchy equations, their
// velocity-space regularization, the zeroth Chapman-Enskog closure, the
// constitutive fixed point, and the reduced self-diffusion hydrodynamics.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mst/functionals.hpp"
#include "mst/grid.hpp"

namespace mst {

// Pressure, the Pi field, and the upper fluxes, all recomputed from the
// registered energy's derivatives at every evaluation.
struct HydroClosure {
  ScalarField p;    // -eps + rho E_rho + u E_u + s E_s, eps the hydro density
  DistFn Pi;        // f E_rho + eta E_s + f E_f
  DistFn K_rho;     // f d_v f*
  DistFn K_u;       // f (f* + v d_v f*)
  DistFn K_e;       // f (f* E_u + Pi d_v f*)
};

HydroClosure hydro_closure(const ExtendedState& x, const StateEnergy& E,
                           const EtaFunction& eta);

enum class CouplingMode { full, diagonal, decoupled };

struct PgRhs {
  ExtendedState rhs;
  ExtendedState euler_part;     // advective fluxes only, f component zero
  ScalarField e_dot;            // audit form of the energy-density equation
  ScalarField sigma_s;          // entropy production density (zero when Lambda = 0)
  double extra_mass_flux = 0.0; // largest magnitude of the f-moment mass flux
};

// Advective part alone: rho, u, s fluxes and the pressure gradient. The f
// component of the result is zero.
ExtendedState euler_rhs(const ExtendedState& x, const StateEnergy& E);

// Full hierarchy right-hand side. CouplingMode::decoupled drops the
// f-moment corrections from the hydro equations, leaving euler_rhs bitwise.
PgRhs pg_rhs(const ExtendedState& x, const StateEnergy& E,
             const EtaFunction& eta, CouplingMode mode = CouplingMode::full);

// Regularized hierarchy: epsilon-scaled spatial flux in the f equation,
// velocity-space drift-diffusion with coefficient lambda, and the matching
// entropy production in the s equation so the total energy carries no
// dissipative term.
PgRhs pg_regularized_rhs(const ExtendedState& x, const StateEnergy& E,
                         const EtaFunction& eta, double lambda, double epsilon,
                         CouplingMode mode = CouplingMode::full);

// Chain-rule energy rate <E_x, rhs> over all four fields; exact for the
// discrete energy functional.
double energy_rate(const ExtendedState& x, const StateEnergy& E,
                   const ExtendedState& rhs);

struct EnergyAudit {
  double rate_regularized = 0.0; // <E_x, regularized rhs>
  double rate_advective = 0.0;   // same with lambda = 0
  double mismatch_rel = 0.0;     // |difference| / max(|E|, 1)
};

EnergyAudit pg_energy_audit(const ExtendedState& x, const StateEnergy& E,
                            const EtaFunction& eta, double lambda,
                            double epsilon);

// --- zeroth Chapman-Enskog closure ----------------------------------------

// d_v(f Lambda d_v f* - f v G) with G = d_r u*, face fluxes vanishing at
// the velocity walls so mass is conserved per spatial cell.
DistFn ce_zeroth_rhs(const DistFn& f, const ScalarField& u_star_gradient,
                     double lambda, const DistFn& f_conjugate);

// Quadratic potential whose gradient in f* is ce_zeroth_rhs; stationarity
// of the potential is the closure relation.
double ce_potential_value(const DistFn& f, const ScalarField& u_star_gradient,
                          double lambda, const DistFn& f_conjugate);

struct CeFixedPoint {
  DistFn f_conjugate;      // stationary conjugate, zero-mean gauge per column
  double residual = 0.0;   // largest face flux magnitude at the fixed point
};

// Solve the stationarity relation lambda f d_v f* = f v G for f* given f.
CeFixedPoint ce_fixed_point(const DistFn& f, const ScalarField& u_star_gradient,
                            double lambda);

struct ViscosityResult {
  double Gamma = 0.0;            // int dv f v^2, averaged over r
  double nu = 0.0;               // Gamma / (2 lambda)
  double closure_residual = 0.0; // stress moment vs (Gamma/lambda) G, relative
};

ViscosityResult viscosity_extract(const DistFn& f_stationary, double lambda,
                                  const ScalarField& u_star_gradient);

// --- constitutive fixed point ----------------------------------------------

struct ConstitutiveResult {
  DistFn f;
  double residual = 0.0;             // projected equation, L-infinity
  double obstruction = 0.0;          // largest r-mean of lambda d_v E_f
  std::vector<double> residual_history;
  int iterations = 0;
  bool converged = false;
  bool boundary_dominated = false;   // wall values of f not negligible
  DistFn f_explicit;                 // one-shot closed form
  double explicit_mismatch = 0.0;    // L-infinity gap iterate vs closed form
};

struct ConstitutiveOptions {
  double relaxation = 0.5;
  double tol = 1e-8;
  int max_iter = 500;
  double mass_tol = 1e-12;
};

// Solve d_r E_rho + d_r(eta_f E_s) + v d_r E_u + d_r E_f = -lambda d_v E_f
// for f at frozen hydro fields. The r-mean of the right-hand side cannot be
// matched by any periodic solution; it is projected out and reported as the
// obstruction. The gauge freedom in v is fixed by a constant chosen so the
// total mass of f matches the integral of rho.
ConstitutiveResult constitutive_fixed_point(const ExtendedState& x,
                                            const StateEnergy& E,
                                            const EtaFunction& eta,
                                            double lambda,
                                            const ConstitutiveOptions& opts = {});

// --- reduced self-diffusion hydrodynamics -----------------------------------

struct ReducedHydroRhs {
  ScalarField rho_dot;
  ScalarField u_dot;
  ScalarField s_dot;
  ScalarField J_s;       // entropy flux
  ScalarField sigma_s;   // entropy production, nonnegative
  ScalarField nu_field;  // int dv f v^2 / (2 lambda)
};

ReducedHydroRhs reduced_hydro_rhs(const ScalarField& rho, const ScalarField& u,
                                  const ScalarField& s, const DistFn& f_closure,
                                  const StateEnergy& E, const EtaFunction& eta,
                                  double lambda,
                                  CouplingMode mode = CouplingMode::diagonal);

}  // namespace mst
