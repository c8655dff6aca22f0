// Reducing Legendre transformations: minimize thermodynamic potentials over
// states (static reduction), invert the multiplier map and probe the double
// transform (involution), and close fluxes by minimizing flux potentials,
// including the scalar diffusion illustration.
#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mst/csv_io.hpp"
#include "mst/functionals.hpp"
#include "mst/grid.hpp"

namespace mst {

struct ReduceOptions {
  double tol = 1e-10;        // weighted L2 norm of the potential gradient
  int max_iter = 200;
  double armijo = 1e-4;      // sufficient-decrease constant for line search
  double alpha_min = 1e-12;  // line-search floor before giving up
};

template <class FieldT>
struct ReductionResultT {
  FieldT minimizer;
  double dual_value = 0.0;  // potential value at the minimizer
  std::map<std::string, double> multipliers;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

using ReductionResult = ReductionResultT<DistFn>;
using DensityReductionResult = ReductionResultT<ScalarField>;

template <class FieldT>
struct ReductionErrorT : std::runtime_error {
  ReductionResultT<FieldT> best;
  ReductionErrorT(const std::string& msg, ReductionResultT<FieldT> b)
      : std::runtime_error(msg), best(std::move(b)) {}
};

// Minimize a potential with analytic gradient over one field. Damped Newton
// with the pointwise Hessian diagonal when available, gradient descent
// otherwise, both under a backtracking line search that treats domain
// errors as infinite values.
template <class FieldT>
ReductionResultT<FieldT> minimize_potential(const FunctionalT<FieldT>& phi,
                                            const FieldT& x0,
                                            const ReduceOptions& opts);

// Static MaxEnt reduction: minimize Phi = -S + E_star E + N_star N from x0.
// dual_value is the reduced entropy S*(E_star, N_star).
ReductionResult reduce_static(const Functional& S, const Functional& E,
                              const Functional& N, double E_star,
                              double N_star, const DistFn& x0,
                              const ReduceOptions& opts = {});

// Outer loop inverting the multiplier map: find (E_star, N_star) whose
// reduced state carries the requested moments (E, N). Uses the envelope
// identities S*_{E*} = E(x_hat), S*_{N*} = N(x_hat) through a damped
// finite-difference Newton iteration on the 2x2 moment-match system.
struct MultiplierSolve {
  double E_star = 0.0;
  double N_star = 0.0;
  ReductionResult inner;
  double moment_residual = 0.0;
  int outer_iterations = 0;
  bool converged = false;
};

MultiplierSolve solve_multipliers(const Functional& S, const Functional& E,
                                  const Functional& N, double E_target,
                                  double N_target, double E_star0,
                                  double N_star0, const DistFn& x0,
                                  const ReduceOptions& inner_opts = {},
                                  double outer_tol = 1e-10,
                                  int outer_max_iter = 60);

// Round trip S -> S* -> S over a grid of multipliers: reduce at each
// (E*, N*), then recover the multipliers from the resulting moments and
// compare the back-transformed entropy against the directly evaluated one.
struct InvolutionRow {
  double E_star = 0.0, N_star = 0.0;   // forward multipliers
  double E_moment = 0.0, N_moment = 0.0;
  double S_direct = 0.0, S_back = 0.0;
  double entropy_err = 0.0;
  double multiplier_err = 0.0;
  bool convex = true;  // 2x2 moment-map Jacobian definiteness at the point
};

struct InvolutionReport {
  std::vector<InvolutionRow> rows;
  double max_entropy_err = 0.0;
  double max_multiplier_err = 0.0;
  int flagged_points = 0;
};

InvolutionReport legendre_involution_check(
    const Functional& S, const Functional& E, const Functional& N,
    const std::vector<double>& E_stars, const std::vector<double>& N_stars,
    const DistFn& x0, const ReduceOptions& inner_opts = {});

// --- flux reduction --------------------------------------------------------

// Linear map from an upper-level flux J to a position-space flux, together
// with its adjoint under the weighted pairings.
template <class FieldT>
struct FluxMapT {
  std::function<ScalarField(const FieldT&)> apply;
  std::function<FieldT(const ScalarField&)> adjoint;
};

using FluxMap = FluxMapT<DistFn>;

template <class FieldT>
struct FluxClosureT {
  ScalarField K_dagger;
  FieldT J_hat;
  ScalarField K_reduced;               // lower-level flux, = dual derivative
  double lower_flux_entropy_value = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

using FluxClosure = FluxClosureT<DistFn>;

// Minimize Psi(J) = -S_flux(J) + <K_dagger, K_up(J)> and return the closed
// flux J_hat, the dual value, and the reduced flux K = K_up(J_hat), which
// equals the derivative of the dual value with respect to K_dagger.
template <class FieldT>
FluxClosureT<FieldT> reduce_flux(const FunctionalT<FieldT>& S_flux,
                                 const FluxMapT<FieldT>& K_up,
                                 const ScalarField& K_dagger, const FieldT& J0,
                                 const ReduceOptions& opts = {});

// Finite-difference cross-check of the conjugacy K = d(dual)/d(K_dagger).
template <class FieldT>
GateauxReport flux_conjugacy_check(const FunctionalT<FieldT>& S_flux,
                                   const FluxMapT<FieldT>& K_up,
                                   const ScalarField& K_dagger, const FieldT& J0,
                                   const ReduceOptions& opts, int n_dirs,
                                   double eps, double rel_tol,
                                   std::uint64_t seed);

// Flux entropy of the kinetic closure: -1/2 lambda int int f J^2.
Functional flux_entropy_quadratic(const DistFn& f_background, double lambda);
// K(J) = int dv f J with its adjoint.
FluxMap moment_flux_map(const DistFn& f_background);

// Position-space analogues used by the diffusion closure: the flux entropy
// -1/2 lambda int J^2 and the identity flux map.
DensityFunctional scalar_flux_entropy_quadratic(double lambda);
FluxMapT<ScalarField> identity_flux_map();

// --- diffusion illustration ------------------------------------------------

// Sign audit for the closed diffusion equation. With the driving force
// K_dagger = d_dr rho* (rho* = S_rho) the closure gives J_hat = -K_dagger /
// lambda and the reduced flux K = -(rho/lambda) K_dagger. The lower gradient
// flow is rho_dot = -d(dual)/d(rho*); chasing the chain rule through the
// r-derivative (which is antisymmetric) flips the sign once more, so
// rho_dot = +d_dr K_reduced = -d_dr((rho/lambda) d_dr rho*). That final
// form is the dissipative one: for concave S it spreads rho and produces
// entropy at rate int (rho/lambda)(d_dr rho*)^2 >= 0. Both the scenario
// integrator and the rate diagnostics below implement that realized form.
struct DiffusionRun {
  CsvTable series;        // t, mass, entropy, sigma
  ScalarField rho_final;
  double dt_max = 0.0;
  double min_sigma = 0.0;
  double mass_drift = 0.0;
};

DiffusionRun diffusion_scenario(const ScalarField& rho0,
                                const DensityFunctional& S, double lambda,
                                double t_end, double dt, int log_stride = 1);

// One evaluation of the diffusion right-hand side (zero-mean face fluxes).
ScalarField diffusion_rhs(const ScalarField& rho, const DensityFunctional& S,
                          double lambda);

// Entropy production of the current state by the face-sum formula.
double diffusion_entropy_production(const ScalarField& rho,
                                    const DensityFunctional& S, double lambda);

// The two conjugate pairings of the entropy-rate relation, evaluated with
// the same face differences the integrator uses, plus their ratio. For an
// externally forced system the diagnostic is disabled, not an error.
struct EntropyRateReport {
  double pairing_state = 0.0;   // <y*, dual derivative wrt y*>
  double pairing_flux = 0.0;    // <K_dagger, dual derivative wrt K_dagger>
  double ratio = 0.0;           // homogeneity ratio between the pairings
  double entropy_rate = 0.0;    // -pairing_state, nonnegative for gradient flow
  bool nonnegative = false;
  bool enabled = true;
  std::string status;
};

EntropyRateReport entropy_rate_diagnostic(const ScalarField& rho,
                                          const DensityFunctional& S,
                                          double lambda, bool forced = false);

}  // namespace mst
