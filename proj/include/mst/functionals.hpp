// Entropy, energy and particle-number functionals over grid fields, their
// analytic variational derivatives, and dissipation potentials. Every
// derivative here is meant in the quadrature-weighted pairing of grid.hpp,
// so a finite-difference Gateaux probe can audit each one.
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mst/grid.hpp"

namespace mst {

struct PhysConstants {
  double m = 1.0;    // particle mass
  double k_B = 1.0;  // Boltzmann constant
  double h = 1.0;    // Planck constant entering entropy through ln(h f)
};

// What to do when a logarithmic integrand meets f <= 0. By default this is
// a hard error; the floor is opt-in and never silently active.
struct PositivityPolicy {
  bool use_floor = false;
  double f_min = 1e-30;
};

// Pointwise eta function defining a Casimir integrand, with derivatives.
struct EtaFunction {
  std::string name;
  std::function<double(double)> eta;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};

EtaFunction eta_identity();
EtaFunction eta_square();
// eta(f) = -k_B f (ln(h f) - 1), the Boltzmann entropy integrand.
EtaFunction eta_boltzmann(const PhysConstants& c, const PositivityPolicy& p);

// A functional of a single field with analytic derivative. hessian_diag is
// the pointwise second derivative of the integrand and is only set for
// local functionals; it feeds the diagonal Newton steps in the reductions.
template <class FieldT>
struct FunctionalT {
  std::string name;
  std::function<double(const FieldT&)> value;
  std::function<FieldT(const FieldT&)> derivative;
  std::function<FieldT(const FieldT&)> hessian_diag;
};

using Functional = FunctionalT<DistFn>;
using DensityFunctional = FunctionalT<ScalarField>;

// --- kinetic-level functionals -------------------------------------------

// S(f) = int dr dv -k_B f (ln(h f) - 1); derivative -k_B ln(h f).
Functional boltzmann_entropy(const PhysConstants& c, const PositivityPolicy& p);
// E(f) = prefactor * int dr dv v^2/(2m) f.
Functional kinetic_energy(const PhysConstants& c, double prefactor = 1.0);
// N(f) = int dr dv f.
Functional number_functional();
// C(f) = int dr dv eta(f).
Functional casimir_functional(const EtaFunction& eta);

// Phi(x) = -S(x) + E_star E(x) + N_star N(x). Its minimizer is the reduced
// state and its minimum value the reduced entropy.
Functional thermo_potential(const Functional& S, const Functional& E,
                            const Functional& N, double E_star, double N_star);

// S(rho) = int dr -k_B rho (ln(h rho) - 1), the configuration-space analogue.
DensityFunctional density_log_entropy(const PhysConstants& c,
                                      const PositivityPolicy& p);

// --- dissipation potentials ----------------------------------------------

// Xi(x, x*): zero at x* = 0 with vanishing conjugate derivative there and
// convex in x* near zero. deriv_conjugate is the variational derivative
// with respect to x* under the weighted pairing.
template <class FieldT>
struct DissipationPotentialT {
  std::string name;
  std::function<double(const FieldT& x, const FieldT& xstar)> value;
  std::function<FieldT(const FieldT& x, const FieldT& xstar)> deriv_conjugate;
  // Names of functionals whose conjugate fields this potential annihilates.
  std::vector<std::string> dissipative_casimirs;
};

using DissipationPotential = DissipationPotentialT<DistFn>;

// Xi = (lambda/2) <x*, x*>; deriv lambda x*. lambda must be positive.
DissipationPotential quadratic_dissipation(double lambda);

// Xi = (lambda/2) sum over velocity faces of mean(f) (delta x*/dv)^2,
// the discrete form of (lambda/2) int f (d_v x*)^2. Its conjugate
// derivative is minus the zero-flux face divergence of lambda mean(f)
// (delta x*/dv), so particle number is a dissipative Casimir exactly.
DissipationPotential velocity_fp_dissipation(double lambda);

// --- combined hydrodynamic + kinetic energy ------------------------------

// Energy over the extended state (rho, u, s, f) with pointwise derivative
// fields and an additive hydro/kinetic split. density is the full spatial
// energy density e(r); hydro_density omits the kinetic moment.
struct StateEnergy {
  std::string name;
  bool additively_split = true;
  std::function<double(const ExtendedState&)> value;
  std::function<ExtendedState(const ExtendedState&)> derivative;
  std::function<ScalarField(const ExtendedState&)> density;
  std::function<ScalarField(const ExtendedState&)> hydro_density;
};

// Monatomic ideal-gas energy: alpha_h [u^2/(2 rho) + B rho^{5/3}
// exp((2/3)(m s/(k_B rho) - 5/2))] plus alpha_k int dv v^2/(2m) f, with
// B = 3h^2/(4 pi m^{8/3}). Throws std::domain_error for rho <= 0.
StateEnergy sackur_tetrode_energy(const PhysConstants& c,
                                  double alpha_hydro = 0.5,
                                  double alpha_kinetic = 0.5);

// Generic quadratic energy used by decoupling tests: hydro part
// 0.5 (u^2/rho + c_rho rho^2 + c_s s^2) plus alpha_k int dv v^2/(2m) f.
StateEnergy quadratic_state_energy(const PhysConstants& c, double c_rho,
                                   double c_s, double alpha_kinetic = 1.0);

// --- finite-difference audits --------------------------------------------

struct GateauxReport {
  double max_rel_err = 0.0;
  bool pass = false;
};

namespace detail {
inline double fill_random(double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}
}  // namespace detail

template <class FieldT>
FieldT random_direction(const FieldT& like, std::uint64_t seed) {
  FieldT d = like;
  std::mt19937_64 rng(seed);
  for (double& x : d.a) x = detail::fill_random(-1.0, 1.0, rng);
  return d;
}

// Central-difference probe of the derivative: compares
// [F(x + eps d) - F(x - eps d)] / (2 eps) against <derivative(x), d> in
// relative terms, over n_dirs pseudo-random directions.
template <class FieldT>
GateauxReport check_gateaux(const FunctionalT<FieldT>& F, const FieldT& x,
                            double (*pairing)(const FieldT&, const FieldT&),
                            int n_dirs, double eps, double rel_tol,
                            std::uint64_t seed) {
  GateauxReport rep;
  const FieldT grad = F.derivative(x);
  for (int k = 0; k < n_dirs; ++k) {
    FieldT d = random_direction(x, seed + static_cast<std::uint64_t>(k));
    FieldT xp = x, xm = x;
    axpy(eps, d, xp);
    axpy(-eps, d, xm);
    const double fd = (F.value(xp) - F.value(xm)) / (2.0 * eps);
    const double an = pairing(grad, d);
    const double scale = std::max({std::fabs(fd), std::fabs(an), 1e-12});
    rep.max_rel_err = std::max(rep.max_rel_err, std::fabs(fd - an) / scale);
  }
  rep.pass = rep.max_rel_err <= rel_tol;
  return rep;
}

GateauxReport check_gateaux_state_energy(const StateEnergy& E,
                                         const ExtendedState& x, int n_dirs,
                                         double eps, double rel_tol,
                                         std::uint64_t seed);

}  // namespace mst
