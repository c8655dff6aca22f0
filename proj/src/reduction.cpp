#include "mst/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mst {

namespace {

double ip_any(const ScalarField& a, const ScalarField& b) { return ip_r(a, b); }
double ip_any(const DistFn& a, const DistFn& b) { return ip_rv(a, b); }

template <class FieldT>
bool finite_positive(const FieldT& h) {
  for (double x : h.a)
    if (!std::isfinite(x) || !(x > 0.0)) return false;
  return true;
}

// Potential value with domain errors mapped to +inf for line-search logic.
template <class FieldT>
double guarded_value(const FunctionalT<FieldT>& phi, const FieldT& x) {
  try {
    const double v = phi.value(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

template <class FieldT>
ReductionResultT<FieldT> minimize_potential(const FunctionalT<FieldT>& phi,
                                            const FieldT& x0,
                                            const ReduceOptions& opts) {
  if (!phi.value || !phi.derivative)
    throw std::invalid_argument("minimize_potential: potential lacks value or derivative");

  ReductionResultT<FieldT> res;
  res.minimizer = x0;
  double val = phi.value(x0);  // x0 must be admissible; domain errors propagate

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    const FieldT grad = phi.derivative(res.minimizer);
    res.residual_norm = std::sqrt(ip_any(grad, grad));
    res.dual_value = val;
    if (res.residual_norm <= opts.tol) {
      res.converged = true;
      return res;
    }
    if (iter == opts.max_iter) break;

    // Candidate directions: pointwise Newton first, steepest descent second.
    std::vector<FieldT> dirs;
    if (phi.hessian_diag) {
      FieldT h = phi.hessian_diag(res.minimizer);
      if (finite_positive(h)) {
        FieldT d = grad;
        for (int i = 0; i < d.size(); ++i) d.a[i] = -grad.a[i] / h.a[i];
        dirs.push_back(std::move(d));
      }
    }
    dirs.push_back(-1.0 * grad);

    bool stepped = false;
    // Sufficient decrease smaller than the evaluation round-off cannot be
    // measured; allow it so the final Newton steps are not rejected on noise.
    const double noise =
        16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(val));
    for (const FieldT& dir : dirs) {
      const double slope = ip_any(grad, dir);
      if (!(slope < 0.0)) continue;
      double alpha = 1.0;
      while (alpha >= opts.alpha_min) {
        FieldT trial = res.minimizer;
        axpy(alpha, dir, trial);
        const double tval = guarded_value(phi, trial);
        if (tval <= val + opts.armijo * alpha * slope + noise) {
          res.minimizer = std::move(trial);
          val = tval;
          stepped = true;
          break;
        }
        alpha *= 0.5;
      }
      if (stepped) break;
    }
    if (!stepped)
      throw ReductionErrorT<FieldT>(
          "minimize_potential: line search reached its floor at residual " +
              format_double(res.residual_norm),
          res);
    res.iterations = iter + 1;
  }
  throw ReductionErrorT<FieldT>(
      "minimize_potential: no convergence in " + std::to_string(opts.max_iter) +
          " iterations (residual " + format_double(res.residual_norm) + ")",
      res);
}

template ReductionResultT<DistFn> minimize_potential<DistFn>(
    const FunctionalT<DistFn>&, const DistFn&, const ReduceOptions&);
template ReductionResultT<ScalarField> minimize_potential<ScalarField>(
    const FunctionalT<ScalarField>&, const ScalarField&, const ReduceOptions&);

ReductionResult reduce_static(const Functional& S, const Functional& E,
                              const Functional& N, double E_star,
                              double N_star, const DistFn& x0,
                              const ReduceOptions& opts) {
  const Functional phi = thermo_potential(S, E, N, E_star, N_star);
  ReductionResult res = minimize_potential(phi, x0, opts);
  res.multipliers = {{"E_star", E_star}, {"N_star", N_star}};
  return res;
}

MultiplierSolve solve_multipliers(const Functional& S, const Functional& E,
                                  const Functional& N, double E_target,
                                  double N_target, double E_star0,
                                  double N_star0, const DistFn& x0,
                                  const ReduceOptions& inner_opts,
                                  double outer_tol, int outer_max_iter) {
  MultiplierSolve out;
  out.E_star = E_star0;
  out.N_star = N_star0;

  DistFn warm = x0;
  auto moments_at = [&](double es, double ns) {
    ReductionResult r = reduce_static(S, E, N, es, ns, warm, inner_opts);
    warm = r.minimizer;
    return r;
  };

  const double scale = std::max({1.0, std::fabs(E_target), std::fabs(N_target)});
  ReductionResult inner = moments_at(out.E_star, out.N_star);
  double rE = E.value(inner.minimizer) - E_target;
  double rN = N.value(inner.minimizer) - N_target;
  double res = std::hypot(rE, rN) / scale;

  for (int it = 0; it < outer_max_iter; ++it) {
    out.outer_iterations = it;
    out.moment_residual = res;
    if (res <= outer_tol) {
      out.converged = true;
      break;
    }
    // Finite-difference Jacobian of the moment map.
    const double hE = 1e-6 * std::max(1.0, std::fabs(out.E_star));
    const double hN = 1e-6 * std::max(1.0, std::fabs(out.N_star));
    ReductionResult pe = moments_at(out.E_star + hE, out.N_star);
    const double jEE = (E.value(pe.minimizer) - (rE + E_target)) / hE;
    const double jNE = (N.value(pe.minimizer) - (rN + N_target)) / hE;
    ReductionResult pn = moments_at(out.E_star, out.N_star + hN);
    const double jEN = (E.value(pn.minimizer) - (rE + E_target)) / hN;
    const double jNN = (N.value(pn.minimizer) - (rN + N_target)) / hN;

    const double det = jEE * jNN - jEN * jNE;
    if (!std::isfinite(det) || std::fabs(det) < 1e-300)
      throw std::runtime_error("solve_multipliers: singular moment-map Jacobian");
    double dE = (-rE * jNN + rN * jEN) / det;
    double dN = (-rN * jEE + rE * jNE) / det;

    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= 1e-6) {
      ReductionResult trial = moments_at(out.E_star + alpha * dE,
                                         out.N_star + alpha * dN);
      const double tE = E.value(trial.minimizer) - E_target;
      const double tN = N.value(trial.minimizer) - N_target;
      const double tres = std::hypot(tE, tN) / scale;
      if (tres < res) {
        out.E_star += alpha * dE;
        out.N_star += alpha * dN;
        inner = trial;
        rE = tE;
        rN = tN;
        res = tres;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw std::runtime_error(
          "solve_multipliers: damped step made no progress at residual " +
          format_double(res));
  }
  out.inner = inner;
  out.moment_residual = res;
  if (!out.converged && res <= outer_tol) out.converged = true;
  return out;
}

InvolutionReport legendre_involution_check(
    const Functional& S, const Functional& E, const Functional& N,
    const std::vector<double>& E_stars, const std::vector<double>& N_stars,
    const DistFn& x0, const ReduceOptions& inner_opts) {
  InvolutionReport rep;
  for (double es : E_stars)
    for (double ns : N_stars) {
      InvolutionRow row;
      row.E_star = es;
      row.N_star = ns;

      ReductionResult fwd = reduce_static(S, E, N, es, ns, x0, inner_opts);
      row.E_moment = E.value(fwd.minimizer);
      row.N_moment = N.value(fwd.minimizer);
      row.S_direct = S.value(fwd.minimizer);

      // Recover the multipliers from the moments, starting away from the
      // forward point so the round trip is a genuine inversion.
      MultiplierSolve back =
          solve_multipliers(S, E, N, row.E_moment, row.N_moment,
                            1.2 * es + 0.1, 0.8 * ns - 0.1, x0, inner_opts);
      row.S_back = -back.inner.dual_value + back.E_star * row.E_moment +
                   back.N_star * row.N_moment;
      row.entropy_err = std::fabs(row.S_back - row.S_direct) /
                        std::max(1.0, std::fabs(row.S_direct));
      row.multiplier_err = std::max(std::fabs(back.E_star - es),
                                    std::fabs(back.N_star - ns));

      // The moment map is the Hessian of the concave dual, so its
      // symmetric part should be negative definite; flag otherwise.
      {
        const double h = 1e-5 * std::max(1.0, std::fabs(es));
        ReductionResult p = reduce_static(S, E, N, es + h, ns, fwd.minimizer, inner_opts);
        ReductionResult m = reduce_static(S, E, N, es - h, ns, fwd.minimizer, inner_opts);
        const double dEE = (E.value(p.minimizer) - E.value(m.minimizer)) / (2 * h);
        const double hn = 1e-5 * std::max(1.0, std::fabs(ns));
        ReductionResult pn = reduce_static(S, E, N, es, ns + hn, fwd.minimizer, inner_opts);
        ReductionResult mn = reduce_static(S, E, N, es, ns - hn, fwd.minimizer, inner_opts);
        const double dNN = (N.value(pn.minimizer) - N.value(mn.minimizer)) / (2 * hn);
        const double dEN = (E.value(pn.minimizer) - E.value(mn.minimizer)) / (2 * hn);
        const double dNE = (N.value(p.minimizer) - N.value(m.minimizer)) / (2 * h);
        const double sym_off = 0.5 * (dEN + dNE);
        row.convex = dEE < 0.0 && dNN < 0.0 && (dEE * dNN - sym_off * sym_off) > 0.0;
      }
      if (!row.convex) ++rep.flagged_points;
      rep.max_entropy_err = std::max(rep.max_entropy_err, row.entropy_err);
      rep.max_multiplier_err = std::max(rep.max_multiplier_err, row.multiplier_err);
      rep.rows.push_back(row);
    }
  return rep;
}

template <class FieldT>
FluxClosureT<FieldT> reduce_flux(const FunctionalT<FieldT>& S_flux,
                                 const FluxMapT<FieldT>& K_up,
                                 const ScalarField& K_dagger, const FieldT& J0,
                                 const ReduceOptions& opts) {
  if (!K_up.apply || !K_up.adjoint)
    throw std::invalid_argument("reduce_flux: flux map lacks apply or adjoint");
  const FieldT force = K_up.adjoint(K_dagger);

  FunctionalT<FieldT> psi;
  psi.name = "flux_potential";
  psi.value = [&](const FieldT& J) {
    return -S_flux.value(J) + ip_r(K_dagger, K_up.apply(J));
  };
  psi.derivative = [&](const FieldT& J) {
    FieldT g = -1.0 * S_flux.derivative(J);
    axpy(1.0, force, g);
    return g;
  };
  if (S_flux.hessian_diag) {
    psi.hessian_diag = [&](const FieldT& J) {
      FieldT h = -1.0 * S_flux.hessian_diag(J);
      double hmax = 0.0;
      for (double x : h.a) hmax = std::max(hmax, std::fabs(x));
      for (double x : h.a)
        if (!(x > 1e-14 * std::max(hmax, 1.0)))
          throw std::runtime_error(
              "reduce_flux: singular stationarity system (min Hessian diag " +
              format_double(x) + " vs max " + format_double(hmax) + ")");
      return h;
    };
  }

  ReductionResultT<FieldT> r = minimize_potential(psi, J0, opts);
  FluxClosureT<FieldT> out;
  out.K_dagger = K_dagger;
  out.J_hat = r.minimizer;
  out.K_reduced = K_up.apply(r.minimizer);
  out.lower_flux_entropy_value = r.dual_value;
  out.residual_norm = r.residual_norm;
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

template FluxClosureT<DistFn> reduce_flux<DistFn>(const FunctionalT<DistFn>&,
                                                  const FluxMapT<DistFn>&,
                                                  const ScalarField&,
                                                  const DistFn&,
                                                  const ReduceOptions&);
template FluxClosureT<ScalarField> reduce_flux<ScalarField>(
    const FunctionalT<ScalarField>&, const FluxMapT<ScalarField>&,
    const ScalarField&, const ScalarField&, const ReduceOptions&);

template <class FieldT>
GateauxReport flux_conjugacy_check(const FunctionalT<FieldT>& S_flux,
                                   const FluxMapT<FieldT>& K_up,
                                   const ScalarField& K_dagger, const FieldT& J0,
                                   const ReduceOptions& opts, int n_dirs,
                                   double eps, double rel_tol,
                                   std::uint64_t seed) {
  GateauxReport rep;
  const FluxClosureT<FieldT> base = reduce_flux(S_flux, K_up, K_dagger, J0, opts);
  for (int k = 0; k < n_dirs; ++k) {
    ScalarField d = random_direction(K_dagger, seed + static_cast<std::uint64_t>(k));
    ScalarField kp = K_dagger, km = K_dagger;
    axpy(eps, d, kp);
    axpy(-eps, d, km);
    const double dp =
        reduce_flux(S_flux, K_up, kp, base.J_hat, opts).lower_flux_entropy_value;
    const double dm =
        reduce_flux(S_flux, K_up, km, base.J_hat, opts).lower_flux_entropy_value;
    const double fd = (dp - dm) / (2.0 * eps);
    const double an = ip_r(base.K_reduced, d);
    const double scale = std::max({std::fabs(fd), std::fabs(an), 1e-12});
    rep.max_rel_err = std::max(rep.max_rel_err, std::fabs(fd - an) / scale);
  }
  rep.pass = rep.max_rel_err <= rel_tol;
  return rep;
}

template GateauxReport flux_conjugacy_check<DistFn>(
    const FunctionalT<DistFn>&, const FluxMapT<DistFn>&, const ScalarField&,
    const DistFn&, const ReduceOptions&, int, double, double, std::uint64_t);
template GateauxReport flux_conjugacy_check<ScalarField>(
    const FunctionalT<ScalarField>&, const FluxMapT<ScalarField>&,
    const ScalarField&, const ScalarField&, const ReduceOptions&, int, double,
    double, std::uint64_t);

Functional flux_entropy_quadratic(const DistFn& f_background, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("flux_entropy_quadratic: lambda must be positive");
  Functional S;
  S.name = "flux_entropy_quadratic";
  S.value = [f_background, lambda](const DistFn& J) {
    return -0.5 * lambda * ip_rv(multiply(f_background, J), J);
  };
  S.derivative = [f_background, lambda](const DistFn& J) {
    return -lambda * multiply(f_background, J);
  };
  S.hessian_diag = [f_background, lambda](const DistFn&) {
    return -lambda * f_background;
  };
  return S;
}

DensityFunctional scalar_flux_entropy_quadratic(double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument(
        "scalar_flux_entropy_quadratic: lambda must be positive");
  DensityFunctional S;
  S.name = "scalar_flux_entropy_quadratic";
  S.value = [lambda](const ScalarField& J) { return -0.5 * lambda * ip_r(J, J); };
  S.derivative = [lambda](const ScalarField& J) { return -lambda * J; };
  S.hessian_diag = [lambda](const ScalarField& J) {
    ScalarField h(*J.grid);
    for (double& x : h.a) x = -lambda;
    return h;
  };
  return S;
}

FluxMapT<ScalarField> identity_flux_map() {
  FluxMapT<ScalarField> K;
  K.apply = [](const ScalarField& J) { return J; };
  K.adjoint = [](const ScalarField& w) { return w; };
  return K;
}

FluxMap moment_flux_map(const DistFn& f_background) {
  FluxMap K;
  K.apply = [f_background](const DistFn& J) {
    return integrate_v(multiply(f_background, J));
  };
  K.adjoint = [f_background](const ScalarField& w) {
    return multiply(f_background, broadcast_r(w, *f_background.grid));
  };
  return K;
}

// --- diffusion illustration ------------------------------------------------

namespace {

struct DiffusionFaces {
  // Face flux of the realized equation rho_dot = -d_dr Q with
  // Q = (rho/lambda) d_dr rho*, midpoint faces, periodic wrap.
  std::vector<double> q;       // flux at face i+1/2
  std::vector<double> dstar;   // (rho*_{i+1} - rho*_i)/dr at face i+1/2
  std::vector<double> rho_face;
};

DiffusionFaces diffusion_faces(const ScalarField& rho, const DensityFunctional& S,
                               double lambda) {
  const PhaseGrid& g = *rho.grid;
  const ScalarField rstar = S.derivative(rho);
  DiffusionFaces F;
  F.q.resize(g.n_r);
  F.dstar.resize(g.n_r);
  F.rho_face.resize(g.n_r);
  for (int i = 0; i < g.n_r; ++i) {
    const int ip = (i + 1) % g.n_r;
    F.rho_face[i] = 0.5 * (rho[i] + rho[ip]);
    F.dstar[i] = (rstar[ip] - rstar[i]) / g.dr;
    F.q[i] = F.rho_face[i] * F.dstar[i] / lambda;
  }
  return F;
}

}  // namespace

ScalarField diffusion_rhs(const ScalarField& rho, const DensityFunctional& S,
                          double lambda) {
  const PhaseGrid& g = *rho.grid;
  const DiffusionFaces F = diffusion_faces(rho, S, lambda);
  ScalarField out(g);
  for (int i = 0; i < g.n_r; ++i) {
    const int im = (i + g.n_r - 1) % g.n_r;
    out[i] = -(F.q[i] - F.q[im]) / g.dr;
  }
  return out;
}

double diffusion_entropy_production(const ScalarField& rho,
                                    const DensityFunctional& S, double lambda) {
  const PhaseGrid& g = *rho.grid;
  const DiffusionFaces F = diffusion_faces(rho, S, lambda);
  double acc = 0.0;
  for (int i = 0; i < g.n_r; ++i)
    acc += F.rho_face[i] * F.dstar[i] * F.dstar[i];
  return acc * g.dr / lambda;
}

DiffusionRun diffusion_scenario(const ScalarField& rho0,
                                const DensityFunctional& S, double lambda,
                                double t_end, double dt, int log_stride) {
  const PhaseGrid& g = *rho0.grid;
  if (!(lambda > 0.0))
    throw std::invalid_argument("diffusion_scenario: lambda must be positive");
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw std::invalid_argument("diffusion_scenario: dt and t_end must be positive");
  for (double x : rho0.a)
    if (!(x > 0.0)) throw std::domain_error("diffusion_scenario: rho0 must be positive");
  if (!S.hessian_diag)
    throw std::invalid_argument("diffusion_scenario: entropy needs hessian_diag for the stability bound");

  // Effective diffusivity D = -rho S''(rho)/lambda; explicit RK4 keeps
  // dt safely inside its parabolic stability interval.
  const ScalarField h = S.hessian_diag(rho0);
  double dmax = 0.0;
  for (int i = 0; i < g.n_r; ++i)
    dmax = std::max(dmax, -rho0[i] * h[i] / lambda);
  DiffusionRun run;
  run.dt_max = 0.65 * g.dr * g.dr / std::max(dmax, 1e-300);
  if (dt > run.dt_max)
    throw std::invalid_argument(
        "diffusion_scenario: dt " + format_double(dt) +
        " exceeds the stability bound dt_max " + format_double(run.dt_max));

  run.series.header = {"t", "mass", "entropy", "sigma"};
  run.min_sigma = std::numeric_limits<double>::infinity();
  ScalarField rho = rho0;
  const double mass0 = integrate_r(rho0);
  const long n_steps = std::lround(t_end / dt);

  auto log_row = [&](double t) {
    const double sigma = diffusion_entropy_production(rho, S, lambda);
    run.min_sigma = std::min(run.min_sigma, sigma);
    run.series.append({t, integrate_r(rho), S.value(rho), sigma});
  };
  log_row(0.0);
  for (long n = 0; n < n_steps; ++n) {
    const ScalarField k1 = diffusion_rhs(rho, S, lambda);
    ScalarField y = rho;
    axpy(0.5 * dt, k1, y);
    const ScalarField k2 = diffusion_rhs(y, S, lambda);
    y = rho;
    axpy(0.5 * dt, k2, y);
    const ScalarField k3 = diffusion_rhs(y, S, lambda);
    y = rho;
    axpy(dt, k3, y);
    const ScalarField k4 = diffusion_rhs(y, S, lambda);
    axpy(dt / 6.0, k1, rho);
    axpy(dt / 3.0, k2, rho);
    axpy(dt / 3.0, k3, rho);
    axpy(dt / 6.0, k4, rho);
    if (!all_finite(rho))
      throw std::runtime_error("diffusion_scenario: non-finite state at step " +
                               std::to_string(n + 1));
    if ((n + 1) % log_stride == 0 || n + 1 == n_steps) log_row((n + 1) * dt);
  }
  run.rho_final = rho;
  run.mass_drift = std::fabs(integrate_r(rho) - mass0) / std::max(1.0, std::fabs(mass0));
  return run;
}

EntropyRateReport entropy_rate_diagnostic(const ScalarField& rho,
                                          const DensityFunctional& S,
                                          double lambda, bool forced) {
  EntropyRateReport rep;
  if (forced) {
    rep.enabled = false;
    rep.status = "disabled: externally forced system, rate identity not asserted";
    return rep;
  }
  const ScalarField rstar = S.derivative(rho);
  const ScalarField rhs = diffusion_rhs(rho, S, lambda);
  // The dual's derivative with respect to rho* is minus the realized RHS.
  rep.pairing_state = ip_r(rstar, -1.0 * rhs);
  const DiffusionFaces F = diffusion_faces(rho, S, lambda);
  double acc = 0.0;
  for (std::size_t i = 0; i < F.q.size(); ++i) acc += F.dstar[i] * (-F.q[i]);
  rep.pairing_flux = acc * rho.grid->dr;
  rep.entropy_rate = -rep.pairing_state;
  rep.nonnegative = rep.entropy_rate >= 0.0;
  const double denom = std::fabs(rep.pairing_flux);
  rep.ratio = denom > 1e-300 ? rep.pairing_state / rep.pairing_flux : 1.0;
  rep.status = denom > 1e-300 ? "ok" : "degenerate: zero pairings (uniform state)";
  return rep;
}

}  // namespace mst
