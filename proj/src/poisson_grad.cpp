#include "mst/poisson_grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mst/csv_io.hpp"

namespace mst {

namespace {

DistFn apply_eta(const DistFn& f, const std::function<double(double)>& fn) {
  DistFn out(*f.grid);
  for (int k = 0; k < f.size(); ++k) out.a[k] = fn(f.a[k]);
  return out;
}

void require_positive(const ScalarField& T, const char* what) {
  for (double x : T.a)
    if (!(x > 0.0)) throw std::domain_error(std::string(what) + " must be positive");
}

ScalarField pressure_field(const ExtendedState& x, const ExtendedState& d,
                           const ScalarField& eps_hydro) {
  ScalarField p(*x.rho.grid);
  for (int i = 0; i < p.size(); ++i)
    p[i] = -eps_hydro[i] + x.rho[i] * d.rho[i] + x.u[i] * d.u[i] + x.s[i] * d.s[i];
  return p;
}

// Velocity-space drift-diffusion faces, used by both the f equation and the
// entropy production so the two cancel in the energy audit to round-off.
struct FpFaces {
  std::vector<double> flux;  // (n_v - 1) interior faces per r cell
  ScalarField production;    // sum of lambda f_face (delta E_f / dv)^2 dv per r
};

FpFaces fp_faces(const DistFn& f, const DistFn& Ef, double lambda) {
  const PhaseGrid& g = *f.grid;
  FpFaces F;
  F.flux.assign(static_cast<std::size_t>(g.n_r) * (g.n_v - 1), 0.0);
  F.production = ScalarField(g);
  for (int i = 0; i < g.n_r; ++i) {
    double acc = 0.0;
    for (int j = 0; j + 1 < g.n_v; ++j) {
      const double fface = 0.5 * (f.at(i, j) + f.at(i, j + 1));
      const double grad = (Ef.at(i, j + 1) - Ef.at(i, j)) / g.dv;
      F.flux[static_cast<std::size_t>(i) * (g.n_v - 1) + j] = lambda * fface * grad;
      acc += lambda * fface * grad * grad;
    }
    F.production[i] = acc * g.dv;
  }
  return F;
}

DistFn div_fp_faces(const FpFaces& F, const PhaseGrid& g) {
  DistFn out(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j) {
      const double above =
          j + 1 < g.n_v ? F.flux[static_cast<std::size_t>(i) * (g.n_v - 1) + j] : 0.0;
      const double below =
          j > 0 ? F.flux[static_cast<std::size_t>(i) * (g.n_v - 1) + j - 1] : 0.0;
      out.at(i, j) = (above - below) / g.dv;
    }
  return out;
}

// Kinetic equation with epsilon-scaled spatial flux and optional
// drift-diffusion; sigma_out receives the production density when given.
DistFn kinetic_rhs(const ExtendedState& x, const ExtendedState& d,
                   const EtaFunction& eta, double epsilon, double lambda,
                   ScalarField* sigma_density) {
  const PhaseGrid& g = *x.f.grid;
  const DistFn eta1 = apply_eta(x.f, eta.d1);
  const DistFn Es_b = broadcast_r(d.s, g);
  const DistFn Eu_b = broadcast_r(d.u, g);

  DistFn spatial = Eu_b;
  axpy(1.0, multiply(deriv_v(eta1), Es_b), spatial);
  axpy(1.0, deriv_v(d.f), spatial);
  DistFn out = -epsilon * deriv_r(multiply(x.f, spatial));

  DistFn force = broadcast_r(deriv_r(d.rho), g);
  axpy(1.0, deriv_r(multiply(eta1, Es_b)), force);
  axpy(1.0, multiply(velocity_field(g), broadcast_r(deriv_r(d.u), g)), force);
  axpy(1.0, deriv_r(d.f), force);
  axpy(1.0, div_v_flux(multiply(x.f, force)), out);

  if (lambda > 0.0) {
    const FpFaces F = fp_faces(x.f, d.f, lambda);
    axpy(1.0, div_fp_faces(F, g), out);
    if (sigma_density) *sigma_density = F.production;
  }
  return out;
}

}  // namespace

HydroClosure hydro_closure(const ExtendedState& x, const StateEnergy& E,
                           const EtaFunction& eta) {
  const PhaseGrid& g = *x.f.grid;
  const ExtendedState d = E.derivative(x);
  HydroClosure c;
  c.p = pressure_field(x, d, E.hydro_density(x));

  const DistFn eta_vals = apply_eta(x.f, eta.eta);
  c.Pi = multiply(x.f, broadcast_r(d.rho, g));
  axpy(1.0, multiply(eta_vals, broadcast_r(d.s, g)), c.Pi);
  axpy(1.0, multiply(x.f, d.f), c.Pi);

  const DistFn dvf = deriv_v(d.f);
  c.K_rho = multiply(x.f, dvf);
  c.K_u = multiply(x.f, d.f + multiply(velocity_field(g), dvf));
  c.K_e = multiply(x.f, multiply(d.f, broadcast_r(d.u, g)));
  axpy(1.0, multiply(c.Pi, dvf), c.K_e);
  return c;
}

ExtendedState euler_rhs(const ExtendedState& x, const StateEnergy& E) {
  const ExtendedState d = E.derivative(x);
  const ScalarField p = pressure_field(x, d, E.hydro_density(x));
  ExtendedState out(*x.rho.grid);
  out.rho = -1.0 * deriv_r(multiply(x.rho, d.u));
  out.u = -1.0 * deriv_r(multiply(x.u, d.u));
  axpy(-1.0, deriv_r(p), out.u);
  out.s = -1.0 * deriv_r(multiply(x.s, d.u));
  return out;
}

namespace {

PgRhs pg_rhs_impl(const ExtendedState& x, const StateEnergy& E,
                  const EtaFunction& eta, double lambda, double epsilon,
                  CouplingMode mode) {
  const PhaseGrid& g = *x.f.grid;
  const ExtendedState d = E.derivative(x);

  PgRhs out;
  out.euler_part = euler_rhs(x, E);
  out.rhs = out.euler_part;
  out.sigma_s = ScalarField(g);
  out.rhs.f = kinetic_rhs(x, d, eta, epsilon, lambda,
                          lambda > 0.0 ? &out.sigma_s : nullptr);

  const DistFn dvEf = deriv_v(d.f);
  const ScalarField mass_flux = integrate_v(multiply(x.f, dvEf));
  out.extra_mass_flux = max_abs(mass_flux);

  const ScalarField eps_hydro = E.hydro_density(x);
  const ScalarField p = pressure_field(x, d, eps_hydro);
  ScalarField e_adv(g);
  for (int i = 0; i < g.n_r; ++i) e_adv[i] = (eps_hydro[i] + p[i]) * d.u[i];
  out.e_dot = -1.0 * deriv_r(e_adv);

  const DistFn eta_vals = apply_eta(x.f, eta.eta);
  if (mode != CouplingMode::decoupled) {
    axpy(-1.0, deriv_r(mass_flux), out.rhs.rho);
    axpy(-1.0, deriv_r(integrate_v(multiply(velocity_field(g),
                                            multiply(x.f, dvEf)))),
         out.rhs.u);
    axpy(-1.0, deriv_r(integrate_v(multiply(eta_vals, dvEf))), out.rhs.s);

    DistFn Pi = multiply(x.f, broadcast_r(d.rho, g));
    axpy(1.0, multiply(eta_vals, broadcast_r(d.s, g)), Pi);
    axpy(1.0, multiply(x.f, d.f), Pi);
    axpy(-1.0, deriv_r(integrate_v(
                   multiply(x.f, multiply(d.f, broadcast_r(d.u, g))))),
         out.e_dot);
    axpy(-1.0, deriv_r(integrate_v(multiply(Pi, dvEf))), out.e_dot);
  }

  if (lambda > 0.0) {
    // Entropy production balancing the drift-diffusion energy loss.
    for (int i = 0; i < g.n_r; ++i) out.sigma_s[i] /= d.s[i];
    axpy(1.0, out.sigma_s, out.rhs.s);
  }
  return out;
}

}  // namespace

PgRhs pg_rhs(const ExtendedState& x, const StateEnergy& E,
             const EtaFunction& eta, CouplingMode mode) {
  return pg_rhs_impl(x, E, eta, 0.0, 1.0, mode);
}

PgRhs pg_regularized_rhs(const ExtendedState& x, const StateEnergy& E,
                         const EtaFunction& eta, double lambda, double epsilon,
                         CouplingMode mode) {
  if (lambda < 0.0)
    throw std::invalid_argument("pg_regularized_rhs: lambda must be nonnegative");
  if (!(epsilon > 0.0) || epsilon > 1.0)
    throw std::invalid_argument("pg_regularized_rhs: epsilon must lie in (0, 1]");
  if (lambda > 0.0) {
    const ExtendedState d = E.derivative(x);
    require_positive(d.s, "pg_regularized_rhs: the temperature E_s");
  }
  return pg_rhs_impl(x, E, eta, lambda, epsilon, mode);
}

double energy_rate(const ExtendedState& x, const StateEnergy& E,
                   const ExtendedState& rhs) {
  const ExtendedState d = E.derivative(x);
  return ip_r(d.rho, rhs.rho) + ip_r(d.u, rhs.u) + ip_r(d.s, rhs.s) +
         ip_rv(d.f, rhs.f);
}

EnergyAudit pg_energy_audit(const ExtendedState& x, const StateEnergy& E,
                            const EtaFunction& eta, double lambda,
                            double epsilon) {
  EnergyAudit out;
  out.rate_regularized =
      energy_rate(x, E, pg_regularized_rhs(x, E, eta, lambda, epsilon).rhs);
  out.rate_advective =
      energy_rate(x, E, pg_regularized_rhs(x, E, eta, 0.0, epsilon).rhs);
  out.mismatch_rel = std::fabs(out.rate_regularized - out.rate_advective) /
                     std::max(1.0, std::fabs(E.value(x)));
  return out;
}

// --- zeroth Chapman-Enskog closure ----------------------------------------

namespace {

double ce_face_flux(const DistFn& f, const DistFn& fs, double lambda,
                    double G_i, int i, int j, const PhaseGrid& g) {
  const double fface = 0.5 * (f.at(i, j) + f.at(i, j + 1));
  const double grad = (fs.at(i, j + 1) - fs.at(i, j)) / g.dv;
  return fface * (lambda * grad - g.v_face(j) * G_i);
}

}  // namespace

DistFn ce_zeroth_rhs(const DistFn& f, const ScalarField& u_star_gradient,
                     double lambda, const DistFn& f_conjugate) {
  const PhaseGrid& g = *f.grid;
  require_same_grid(f, f_conjugate);
  DistFn out(g);
  for (int i = 0; i < g.n_r; ++i) {
    double below = 0.0;
    for (int j = 0; j < g.n_v; ++j) {
      const double above =
          j + 1 < g.n_v
              ? ce_face_flux(f, f_conjugate, lambda, u_star_gradient[i], i, j, g)
              : 0.0;
      out.at(i, j) = (above - below) / g.dv;
      below = above;
    }
  }
  return out;
}

double ce_potential_value(const DistFn& f, const ScalarField& u_star_gradient,
                          double lambda, const DistFn& f_conjugate) {
  const PhaseGrid& g = *f.grid;
  double acc = 0.0;
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j + 1 < g.n_v; ++j) {
      const double fface = 0.5 * (f.at(i, j) + f.at(i, j + 1));
      const double grad = (f_conjugate.at(i, j + 1) - f_conjugate.at(i, j)) / g.dv;
      acc += fface * grad *
             (-0.5 * lambda * grad + g.v_face(j) * u_star_gradient[i]);
    }
  return acc * g.dv * g.dr;
}

CeFixedPoint ce_fixed_point(const DistFn& f, const ScalarField& u_star_gradient,
                            double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("ce_fixed_point: lambda must be positive");
  const PhaseGrid& g = *f.grid;
  CeFixedPoint out;
  out.f_conjugate = DistFn(g);
  for (int i = 0; i < g.n_r; ++i) {
    double val = 0.0, mean = 0.0;
    for (int j = 0; j < g.n_v; ++j) {
      out.f_conjugate.at(i, j) = val;
      mean += val;
      if (j + 1 < g.n_v) val += g.v_face(j) * u_star_gradient[i] * g.dv / lambda;
    }
    mean /= g.n_v;
    for (int j = 0; j < g.n_v; ++j) out.f_conjugate.at(i, j) -= mean;
  }
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j + 1 < g.n_v; ++j)
      out.residual = std::max(
          out.residual,
          std::fabs(ce_face_flux(f, out.f_conjugate, lambda,
                                 u_star_gradient[i], i, j, g)));
  return out;
}

ViscosityResult viscosity_extract(const DistFn& f_stationary, double lambda,
                                  const ScalarField& u_star_gradient) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("viscosity_extract: lambda must be positive");
  const PhaseGrid& g = *f_stationary.grid;
  const CeFixedPoint fp = ce_fixed_point(f_stationary, u_star_gradient, lambda);

  const ScalarField second =
      integrate_v_weighted(f_stationary, [](double v) { return v * v; });
  double Gamma = 0.0;
  for (int i = 0; i < g.n_r; ++i) Gamma += second[i];
  Gamma /= g.n_r;
  if (!(Gamma > 0.0))
    throw std::runtime_error("viscosity_extract: nonpositive second moment " +
                             format_double(Gamma));

  ViscosityResult res;
  res.Gamma = Gamma;
  res.nu = Gamma / (2.0 * lambda);

  const DistFn dvfs = deriv_v(fp.f_conjugate);
  const ScalarField stress = integrate_v(
      multiply(velocity_field(g), multiply(f_stationary, dvfs)));
  double scale = 0.0, err = 0.0;
  for (int i = 0; i < g.n_r; ++i) {
    const double target = Gamma / lambda * u_star_gradient[i];
    scale = std::max({scale, std::fabs(target), std::fabs(stress[i])});
    err = std::max(err, std::fabs(stress[i] - target));
  }
  res.closure_residual = scale > 0.0 ? err / scale : 0.0;
  return res;
}

// --- constitutive fixed point ----------------------------------------------

namespace {

// Invert eta'(f) = y pointwise. Newton with positivity clamp; closed form
// for the entropic eta.
double invert_eta1(const EtaFunction& eta, double y, double f_guess,
                   const PhysConstants& consts) {
  if (eta.name == "boltzmann")
    return std::exp(-y / consts.k_B) / consts.h;
  double f = f_guess > 0.0 ? f_guess : 1.0;
  for (int it = 0; it < 80; ++it) {
    const double r = eta.d1(f) - y;
    const double dr = eta.d2(f);
    if (!(std::fabs(dr) > 0.0)) break;
    double step = -r / dr;
    while (f + step <= 0.0) step *= 0.5;
    f += step;
    if (std::fabs(r) < 1e-14 * std::max(1.0, std::fabs(y))) break;
  }
  return f;
}

}  // namespace

ConstitutiveResult constitutive_fixed_point(const ExtendedState& x,
                                            const StateEnergy& E,
                                            const EtaFunction& eta,
                                            double lambda,
                                            const ConstitutiveOptions& opts) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("constitutive_fixed_point: lambda must be positive");
  const PhaseGrid& g = *x.f.grid;
  const PhysConstants consts{};  // the gauge inversion scales with k_B, h
  const double mass_target = integrate_r(x.rho);

  ConstitutiveResult out;
  out.f = x.f;
  ExtendedState work = x;

  auto reconstruct = [&](const DistFn& f_cur, double& obstruction) {
    work.f = f_cur;
    const ExtendedState d = E.derivative(work);
    require_positive(d.s, "constitutive_fixed_point: the temperature E_s");

    // r-mean of the velocity-force term is unreachable for periodic fields;
    // split it off and integrate only the mean-free remainder.
    DistFn W = lambda * deriv_v(d.f);
    std::vector<double> wbar(g.n_v, 0.0);
    for (int j = 0; j < g.n_v; ++j) {
      double m = 0.0;
      for (int i = 0; i < g.n_r; ++i) m += W.at(i, j);
      wbar[j] = m / g.n_r;
    }
    obstruction = 0.0;
    for (double wb : wbar) obstruction = std::max(obstruction, std::fabs(wb));
    for (int i = 0; i < g.n_r; ++i)
      for (int j = 0; j < g.n_v; ++j) W.at(i, j) -= wbar[j];

    DistFn P(g);
    for (int j = 0; j < g.n_v; ++j) {
      double run = 0.0;
      for (int i = 0; i < g.n_r; ++i) {
        P.at(i, j) = run;
        const int ip = (i + 1) % g.n_r;
        run += 0.5 * (W.at(i, j) + W.at(ip, j)) * g.dr;
      }
    }

    DistFn psi0 = -1.0 * broadcast_r(d.rho, g);
    axpy(-1.0, multiply(velocity_field(g), broadcast_r(d.u, g)), psi0);
    axpy(-1.0, d.f, psi0);
    axpy(-1.0, P, psi0);

    // The r-integration leaves one free constant per velocity row. Fix it by
    // removing the r-mean of the assembled potential: the derivative kills
    // any row constant, and this choice keeps the profile flat where the
    // fields carry no r-variation (zero gradients then give a v-uniform f).
    // It also makes the result independent of where the running sum starts.
    for (int j = 0; j < g.n_v; ++j) {
      double m = 0.0;
      for (int i = 0; i < g.n_r; ++i) m += psi0.at(i, j);
      m /= g.n_r;
      for (int i = 0; i < g.n_r; ++i) psi0.at(i, j) -= m;
    }

    // One global constant remains; it sets the total mass. Newton on the
    // scalar mass equation, taken in log space when the masses allow, since
    // for the entropic eta the mass depends exponentially on the constant.
    double c0 = 0.0;
    DistFn f_new(g);
    bool gauge_ok = false;
    for (int it = 0; it < 200; ++it) {
      double mass = 0.0, dmass = 0.0;
      for (int i = 0; i < g.n_r; ++i)
        for (int j = 0; j < g.n_v; ++j) {
          const double y = (psi0.at(i, j) + c0) / d.s[i];
          const double fv = invert_eta1(eta, y, f_cur.at(i, j), consts);
          f_new.at(i, j) = fv;
          mass += fv;
          dmass += 1.0 / (eta.d2(fv) * d.s[i]);
        }
      mass *= g.dr * g.dv;
      dmass *= g.dr * g.dv;
      const double r = mass - mass_target;
      if (std::fabs(r) <= opts.mass_tol * std::max(1.0, std::fabs(mass_target))) {
        gauge_ok = true;
        break;
      }
      if (!(std::fabs(dmass) > 0.0))
        throw std::runtime_error(
            "constitutive_fixed_point: gauge solve stalled, zero mass slope");
      if (mass > 0.0 && mass_target > 0.0)
        c0 -= std::log(mass / mass_target) * mass / dmass;
      else
        c0 -= r / dmass;
    }
    if (!gauge_ok)
      throw std::runtime_error(
          "constitutive_fixed_point: mass gauge did not converge");
    return f_new;
  };

  auto projected_residual = [&](const DistFn& f_cur) {
    work.f = f_cur;
    const ExtendedState d = E.derivative(work);
    const DistFn eta1 = apply_eta(f_cur, eta.d1);
    DistFn R = broadcast_r(deriv_r(d.rho), g);
    axpy(1.0, deriv_r(multiply(eta1, broadcast_r(d.s, g))), R);
    axpy(1.0, multiply(velocity_field(g), broadcast_r(deriv_r(d.u), g)), R);
    axpy(1.0, deriv_r(d.f), R);
    DistFn W = lambda * deriv_v(d.f);
    for (int j = 0; j < g.n_v; ++j) {
      double m = 0.0;
      for (int i = 0; i < g.n_r; ++i) m += W.at(i, j);
      m /= g.n_r;
      for (int i = 0; i < g.n_r; ++i) R.at(i, j) += W.at(i, j) - m;
    }
    return max_abs(R);
  };

  for (int it = 0; it < opts.max_iter; ++it) {
    const DistFn f_new = reconstruct(out.f, out.obstruction);
    DistFn next = (1.0 - opts.relaxation) * out.f;
    axpy(opts.relaxation, f_new, next);
    out.f = next;
    out.iterations = it + 1;
    out.residual = projected_residual(out.f);
    out.residual_history.push_back(out.residual);
    if (!std::isfinite(out.residual) ||
        (out.residual_history.size() > 5 &&
         out.residual > 10.0 * std::max(out.residual_history.front(), 1.0))) {
      std::string msg = "constitutive_fixed_point: iteration diverged; residuals:";
      for (double r : out.residual_history) msg += " " + format_double(r);
      throw std::runtime_error(msg);
    }
    if (out.residual <= opts.tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged)
    throw std::runtime_error(
        "constitutive_fixed_point: no convergence in " +
        std::to_string(opts.max_iter) + " iterations (residual " +
        format_double(out.residual) + ")");

  // The derivative-based residual cannot see the row-constant direction, so
  // the relaxed mix can stop short of the reconstructed profile. Finish with
  // one full step so the returned state solves the gauged equation itself.
  out.f = reconstruct(out.f, out.obstruction);
  out.residual = projected_residual(out.f);
  out.residual_history.push_back(out.residual);

  double dummy = 0.0;
  out.f_explicit = reconstruct(x.f, dummy);
  out.explicit_mismatch = max_abs_diff(out.f, out.f_explicit);

  const double fmax = max_abs(out.f);
  for (int i = 0; i < g.n_r && !out.boundary_dominated; ++i)
    if (std::max(out.f.at(i, 0), out.f.at(i, g.n_v - 1)) > 0.1 * fmax)
      out.boundary_dominated = true;
  return out;
}

// --- reduced self-diffusion hydrodynamics -----------------------------------

ReducedHydroRhs reduced_hydro_rhs(const ScalarField& rho, const ScalarField& u,
                                  const ScalarField& s, const DistFn& f_closure,
                                  const StateEnergy& E, const EtaFunction& eta,
                                  double lambda, CouplingMode mode) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("reduced_hydro_rhs: lambda must be positive");
  const PhaseGrid& g = *f_closure.grid;
  ExtendedState x(g);
  x.rho = rho;
  x.u = u;
  x.s = s;
  x.f = f_closure;
  const ExtendedState d = E.derivative(x);
  require_positive(d.s, "reduced_hydro_rhs: the temperature E_s");

  const DistFn eta1 = apply_eta(f_closure, eta.d1);
  const DistFn g_rho = broadcast_r(deriv_r(d.rho), g);
  const DistFn g_eta = deriv_r(multiply(eta1, broadcast_r(d.s, g)));
  const DistFn g_u = multiply(velocity_field(g), broadcast_r(deriv_r(d.u), g));
  const DistFn g_f = deriv_r(d.f);
  DistFn G = g_rho + g_eta;
  axpy(1.0, g_u, G);
  axpy(1.0, g_f, G);

  ReducedHydroRhs out;
  const ExtendedState adv = euler_rhs(x, E);
  out.rho_dot = adv.rho;
  out.u_dot = adv.u;
  out.s_dot = adv.s;

  const DistFn& G_rho_mode = mode == CouplingMode::full ? G : g_rho;
  const DistFn& G_u_mode = mode == CouplingMode::full ? G : g_u;
  axpy(1.0,
       deriv_r((1.0 / lambda) * integrate_v(multiply(f_closure, G_rho_mode))),
       out.rho_dot);
  axpy(1.0,
       deriv_r((1.0 / lambda) * integrate_v(multiply(
                   velocity_field(g), multiply(f_closure, G_u_mode)))),
       out.u_dot);

  const DistFn eta_vals = apply_eta(f_closure, eta.eta);
  out.J_s = (-1.0 / lambda) * integrate_v(multiply(eta_vals, G));
  out.sigma_s = ScalarField(g);
  const ScalarField quad =
      integrate_v(multiply(f_closure, multiply(G, G)));
  for (int i = 0; i < g.n_r; ++i) out.sigma_s[i] = quad[i] / (lambda * d.s[i]);
  axpy(-1.0, deriv_r(out.J_s), out.s_dot);
  axpy(1.0, out.sigma_s, out.s_dot);

  out.nu_field =
      (0.5 / lambda) * integrate_v_weighted(f_closure, [](double v) { return v * v; });
  for (double nu : out.nu_field.a)
    if (nu < 0.0)
      throw std::runtime_error("reduced_hydro_rhs: negative viscosity " +
                               format_double(nu));
  return out;
}

}  // namespace mst
