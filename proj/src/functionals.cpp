#include "mst/functionals.hpp"

#include <cmath>

namespace mst {

namespace {

// Logarithm guarded by the positivity policy: hard error on f <= 0 unless
// the caller opted into the floor.
double guarded_log_arg(double f, const PositivityPolicy& p) {
  if (p.use_floor) return std::max(f, p.f_min);
  if (f <= 0.0)
    throw std::domain_error("logarithmic integrand evaluated at f <= 0");
  return f;
}

}  // namespace

EtaFunction eta_identity() {
  return {"identity", [](double f) { return f; }, [](double) { return 1.0; },
          [](double) { return 0.0; }};
}

EtaFunction eta_square() {
  return {"square", [](double f) { return f * f; },
          [](double f) { return 2.0 * f; }, [](double) { return 2.0; }};
}

EtaFunction eta_boltzmann(const PhysConstants& c, const PositivityPolicy& p) {
  const double kB = c.k_B, h = c.h;
  return {"boltzmann",
          [kB, h, p](double f) {
            const double fa = guarded_log_arg(f, p);
            return -kB * fa * (std::log(h * fa) - 1.0);
          },
          [kB, h, p](double f) {
            return -kB * std::log(h * guarded_log_arg(f, p));
          },
          [kB, p](double f) { return -kB / guarded_log_arg(f, p); }};
}

Functional boltzmann_entropy(const PhysConstants& c, const PositivityPolicy& p) {
  Functional F = casimir_functional(eta_boltzmann(c, p));
  F.name = "boltzmann_entropy";
  return F;
}

Functional kinetic_energy(const PhysConstants& c, double prefactor) {
  const double w = prefactor / (2.0 * c.m);
  Functional F;
  F.name = "kinetic_energy";
  F.value = [w](const DistFn& f) {
    const PhaseGrid& g = *f.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n_r; ++i)
      for (int j = 0; j < g.n_v; ++j) acc += g.v[j] * g.v[j] * f.at(i, j);
    return w * acc * g.dr * g.dv;
  };
  F.derivative = [w](const DistFn& f) {
    const PhaseGrid& g = *f.grid;
    DistFn out(g);
    for (int i = 0; i < g.n_r; ++i)
      for (int j = 0; j < g.n_v; ++j) out.at(i, j) = w * g.v[j] * g.v[j];
    return out;
  };
  F.hessian_diag = [](const DistFn& f) { return DistFn(*f.grid); };
  return F;
}

Functional number_functional() {
  Functional F;
  F.name = "number";
  F.value = [](const DistFn& f) { return integrate_rv(f); };
  F.derivative = [](const DistFn& f) {
    DistFn out(*f.grid);
    for (double& x : out.a) x = 1.0;
    return out;
  };
  F.hessian_diag = [](const DistFn& f) { return DistFn(*f.grid); };
  return F;
}

Functional casimir_functional(const EtaFunction& eta) {
  Functional F;
  F.name = "casimir_" + eta.name;
  F.value = [eta](const DistFn& f) {
    double acc = 0.0;
    for (double fi : f.a) acc += eta.eta(fi);
    return acc * f.grid->dr * f.grid->dv;
  };
  F.derivative = [eta](const DistFn& f) {
    DistFn out(*f.grid);
    for (int i = 0; i < f.size(); ++i) out.a[i] = eta.d1(f.a[i]);
    return out;
  };
  F.hessian_diag = [eta](const DistFn& f) {
    DistFn out(*f.grid);
    for (int i = 0; i < f.size(); ++i) out.a[i] = eta.d2(f.a[i]);
    return out;
  };
  return F;
}

Functional thermo_potential(const Functional& S, const Functional& E,
                            const Functional& N, double E_star, double N_star) {
  Functional F;
  F.name = "thermo_potential";
  F.value = [=](const DistFn& f) {
    return -S.value(f) + E_star * E.value(f) + N_star * N.value(f);
  };
  F.derivative = [=](const DistFn& f) {
    DistFn out = S.derivative(f);
    out = -1.0 * out;
    axpy(E_star, E.derivative(f), out);
    axpy(N_star, N.derivative(f), out);
    return out;
  };
  if (S.hessian_diag && E.hessian_diag && N.hessian_diag) {
    F.hessian_diag = [=](const DistFn& f) {
      DistFn out = S.hessian_diag(f);
      out = -1.0 * out;
      axpy(E_star, E.hessian_diag(f), out);
      axpy(N_star, N.hessian_diag(f), out);
      return out;
    };
  }
  return F;
}

DensityFunctional density_log_entropy(const PhysConstants& c,
                                      const PositivityPolicy& p) {
  const double kB = c.k_B, h = c.h;
  DensityFunctional F;
  F.name = "density_log_entropy";
  F.value = [kB, h, p](const ScalarField& rho) {
    double acc = 0.0;
    for (double x : rho.a) {
      const double xa = guarded_log_arg(x, p);
      acc += -kB * xa * (std::log(h * xa) - 1.0);
    }
    return acc * rho.grid->dr;
  };
  F.derivative = [kB, h, p](const ScalarField& rho) {
    ScalarField out(*rho.grid);
    for (int i = 0; i < rho.size(); ++i)
      out[i] = -kB * std::log(h * guarded_log_arg(rho[i], p));
    return out;
  };
  F.hessian_diag = [kB, p](const ScalarField& rho) {
    ScalarField out(*rho.grid);
    for (int i = 0; i < rho.size(); ++i)
      out[i] = -kB / guarded_log_arg(rho[i], p);
    return out;
  };
  return F;
}

DissipationPotential quadratic_dissipation(double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("quadratic_dissipation: lambda must be positive");
  DissipationPotential X;
  X.name = "quadratic";
  X.value = [lambda](const DistFn&, const DistFn& xs) {
    return 0.5 * lambda * ip_rv(xs, xs);
  };
  X.deriv_conjugate = [lambda](const DistFn&, const DistFn& xs) {
    return lambda * xs;
  };
  return X;
}

DissipationPotential velocity_fp_dissipation(double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("velocity_fp_dissipation: lambda must be positive");
  DissipationPotential X;
  X.name = "velocity_fp";
  X.dissipative_casimirs = {"number"};
  X.value = [lambda](const DistFn& f, const DistFn& xs) {
    require_same_grid(f, xs);
    const PhaseGrid& g = *f.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n_r; ++i)
      for (int j = 0; j + 1 < g.n_v; ++j) {
        const double fface = 0.5 * (f.at(i, j) + f.at(i, j + 1));
        const double dxs = (xs.at(i, j + 1) - xs.at(i, j)) / g.dv;
        acc += fface * dxs * dxs;
      }
    return 0.5 * lambda * acc * g.dr * g.dv;
  };
  X.deriv_conjugate = [lambda](const DistFn& f, const DistFn& xs) {
    require_same_grid(f, xs);
    const PhaseGrid& g = *f.grid;
    DistFn out(g);
    for (int i = 0; i < g.n_r; ++i) {
      double below = 0.0;
      for (int j = 0; j < g.n_v; ++j) {
        double above = 0.0;
        if (j + 1 < g.n_v) {
          const double fface = 0.5 * (f.at(i, j) + f.at(i, j + 1));
          above = lambda * fface * (xs.at(i, j + 1) - xs.at(i, j)) / g.dv;
        }
        out.at(i, j) = -(above - below) / g.dv;
        below = above;
      }
    }
    return out;
  };
  return X;
}

namespace {

void require_positive_rho(const ScalarField& rho, const char* who) {
  for (double x : rho.a)
    if (!(x > 0.0)) throw std::domain_error(std::string(who) + ": rho <= 0");
}

}  // namespace

StateEnergy sackur_tetrode_energy(const PhysConstants& c, double alpha_hydro,
                                  double alpha_kinetic) {
  const double m = c.m, kB = c.k_B, h = c.h;
  const double B = 3.0 * h * h / (4.0 * M_PI * std::pow(m, 8.0 / 3.0));
  const double ah = alpha_hydro, ak = alpha_kinetic;

  // W(rho, s) = B rho^{5/3} exp((2 m s)/(3 k_B rho) - 5/3)
  auto W = [=](double rho, double s) {
    return B * std::pow(rho, 5.0 / 3.0) *
           std::exp(2.0 * m * s / (3.0 * kB * rho) - 5.0 / 3.0);
  };

  StateEnergy E;
  E.name = "sackur_tetrode";
  E.additively_split = true;
  E.hydro_density = [=](const ExtendedState& x) {
    require_positive_rho(x.rho, "sackur_tetrode_energy");
    ScalarField e(*x.rho.grid);
    for (int i = 0; i < e.size(); ++i)
      e[i] = ah * (x.u[i] * x.u[i] / (2.0 * x.rho[i]) + W(x.rho[i], x.s[i]));
    return e;
  };
  E.density = [=](const ExtendedState& x) {
    ScalarField e = E.hydro_density(x);
    const PhaseGrid& g = *x.f.grid;
    for (int i = 0; i < g.n_r; ++i) {
      double acc = 0.0;
      for (int j = 0; j < g.n_v; ++j)
        acc += g.v[j] * g.v[j] / (2.0 * m) * x.f.at(i, j);
      e[i] += ak * acc * g.dv;
    }
    return e;
  };
  E.value = [=](const ExtendedState& x) { return integrate_r(E.density(x)); };
  E.derivative = [=](const ExtendedState& x) {
    require_positive_rho(x.rho, "sackur_tetrode_energy");
    const PhaseGrid& g = *x.f.grid;
    ExtendedState d(g);
    for (int i = 0; i < g.n_r; ++i) {
      const double rho = x.rho[i], u = x.u[i], s = x.s[i];
      const double w = W(rho, s);
      d.rho[i] = ah * (-u * u / (2.0 * rho * rho) +
                       w * (5.0 / (3.0 * rho) - 2.0 * m * s / (3.0 * kB * rho * rho)));
      d.u[i] = ah * u / rho;
      d.s[i] = ah * w * 2.0 * m / (3.0 * kB * rho);
      for (int j = 0; j < g.n_v; ++j)
        d.f.at(i, j) = ak * g.v[j] * g.v[j] / (2.0 * m);
    }
    return d;
  };
  return E;
}

StateEnergy quadratic_state_energy(const PhysConstants& c, double c_rho,
                                   double c_s, double alpha_kinetic) {
  const double m = c.m, ak = alpha_kinetic;
  StateEnergy E;
  E.name = "quadratic_state";
  E.additively_split = true;
  E.hydro_density = [=](const ExtendedState& x) {
    require_positive_rho(x.rho, "quadratic_state_energy");
    ScalarField e(*x.rho.grid);
    for (int i = 0; i < e.size(); ++i)
      e[i] = 0.5 * (x.u[i] * x.u[i] / x.rho[i] + c_rho * x.rho[i] * x.rho[i] +
                    c_s * x.s[i] * x.s[i]);
    return e;
  };
  E.density = [=](const ExtendedState& x) {
    ScalarField e = E.hydro_density(x);
    const PhaseGrid& g = *x.f.grid;
    for (int i = 0; i < g.n_r; ++i) {
      double acc = 0.0;
      for (int j = 0; j < g.n_v; ++j)
        acc += g.v[j] * g.v[j] / (2.0 * m) * x.f.at(i, j);
      e[i] += ak * acc * g.dv;
    }
    return e;
  };
  E.value = [=](const ExtendedState& x) { return integrate_r(E.density(x)); };
  E.derivative = [=](const ExtendedState& x) {
    require_positive_rho(x.rho, "quadratic_state_energy");
    const PhaseGrid& g = *x.f.grid;
    ExtendedState d(g);
    for (int i = 0; i < g.n_r; ++i) {
      d.rho[i] = 0.5 * (-x.u[i] * x.u[i] / (x.rho[i] * x.rho[i])) + c_rho * x.rho[i];
      d.u[i] = x.u[i] / x.rho[i];
      d.s[i] = c_s * x.s[i];
      for (int j = 0; j < g.n_v; ++j)
        d.f.at(i, j) = ak * g.v[j] * g.v[j] / (2.0 * m);
    }
    return d;
  };
  return E;
}

GateauxReport check_gateaux_state_energy(const StateEnergy& E,
                                         const ExtendedState& x, int n_dirs,
                                         double eps, double rel_tol,
                                         std::uint64_t seed) {
  GateauxReport rep;
  const ExtendedState grad = E.derivative(x);
  for (int k = 0; k < n_dirs; ++k) {
    const std::uint64_t s = seed + 1000003ULL * static_cast<std::uint64_t>(k);
    ExtendedState d(*x.f.grid);
    d.rho = random_direction(x.rho, s);
    d.u = random_direction(x.u, s + 1);
    d.s = random_direction(x.s, s + 2);
    d.f = random_direction(x.f, s + 3);
    ExtendedState xp = x, xm = x;
    axpy(eps, d, xp);
    axpy(-eps, d, xm);
    const double fd = (E.value(xp) - E.value(xm)) / (2.0 * eps);
    const double an = ip_r(grad.rho, d.rho) + ip_r(grad.u, d.u) +
                      ip_r(grad.s, d.s) + ip_rv(grad.f, d.f);
    const double scale = std::max({std::fabs(fd), std::fabs(an), 1e-12});
    rep.max_rel_err = std::max(rep.max_rel_err, std::fabs(fd - an) / scale);
  }
  rep.pass = rep.max_rel_err <= rel_tol;
  return rep;
}

}  // namespace mst
