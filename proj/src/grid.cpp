#include "mst/grid.hpp"

#include <cmath>

namespace mst {

PhaseGrid::PhaseGrid(int nr, int nv, double lr, double vmax)
    : n_r(nr), n_v(nv), length_r(lr), v_max(vmax) {
  if (n_r < 3 || n_v < 3)
    throw std::invalid_argument("PhaseGrid: need at least 3 cells per direction");
  if (!(length_r > 0.0) || !(v_max > 0.0))
    throw std::invalid_argument("PhaseGrid: length_r and v_max must be positive");
  dr = length_r / n_r;
  dv = 2.0 * v_max / n_v;
  r.resize(n_r);
  v.resize(n_v);
  for (int i = 0; i < n_r; ++i) r[i] = (i + 0.5) * dr;
  for (int j = 0; j < n_v; ++j) v[j] = -v_max + (j + 0.5) * dv;
}

void require_same_grid(const ScalarField& x, const ScalarField& y) {
  if (!x.grid || !y.grid || !x.grid->same_as(*y.grid))
    throw std::invalid_argument("scalar fields live on different grids");
}

void require_same_grid(const DistFn& x, const DistFn& y) {
  if (!x.grid || !y.grid || !x.grid->same_as(*y.grid))
    throw std::invalid_argument("distribution fields live on different grids");
}

double integrate_r(const ScalarField& x) {
  double acc = 0.0;
  for (double xi : x.a) acc += xi;
  return acc * x.grid->dr;
}

ScalarField integrate_v(const DistFn& f) {
  const PhaseGrid& g = *f.grid;
  ScalarField out(g);
  for (int i = 0; i < g.n_r; ++i) {
    double acc = 0.0;
    for (int j = 0; j < g.n_v; ++j) acc += f.at(i, j);
    out[i] = acc * g.dv;
  }
  return out;
}

double integrate_rv(const DistFn& f) {
  double acc = 0.0;
  for (double fi : f.a) acc += fi;
  return acc * f.grid->dr * f.grid->dv;
}

ScalarField integrate_v_weighted(const DistFn& f,
                                 const std::function<double(double)>& w) {
  const PhaseGrid& g = *f.grid;
  ScalarField out(g);
  for (int i = 0; i < g.n_r; ++i) {
    double acc = 0.0;
    for (int j = 0; j < g.n_v; ++j) acc += w(g.v[j]) * f.at(i, j);
    out[i] = acc * g.dv;
  }
  return out;
}

Moments moments(const DistFn& f, const std::function<double(double)>& eta) {
  const PhaseGrid& g = *f.grid;
  Moments m{ScalarField(g), ScalarField(g), ScalarField(g)};
  for (int i = 0; i < g.n_r; ++i) {
    double m0 = 0.0, m1 = 0.0, ms = 0.0;
    for (int j = 0; j < g.n_v; ++j) {
      const double fij = f.at(i, j);
      m0 += fij;
      m1 += g.v[j] * fij;
      ms += eta(fij);
    }
    m.rho[i] = m0 * g.dv;
    m.u[i] = m1 * g.dv;
    m.s[i] = ms * g.dv;
  }
  return m;
}

double ip_r(const ScalarField& x, const ScalarField& y) {
  require_same_grid(x, y);
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc * x.grid->dr;
}

double ip_rv(const DistFn& x, const DistFn& y) {
  require_same_grid(x, y);
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) acc += x.a[i] * y.a[i];
  return acc * x.grid->dr * x.grid->dv;
}

ScalarField deriv_r(const ScalarField& x) {
  const PhaseGrid& g = *x.grid;
  ScalarField out(g);
  const double inv2dr = 1.0 / (2.0 * g.dr);
  for (int i = 0; i < g.n_r; ++i) {
    const int ip = (i + 1) % g.n_r;
    const int im = (i + g.n_r - 1) % g.n_r;
    out[i] = (x[ip] - x[im]) * inv2dr;
  }
  return out;
}

DistFn deriv_r(const DistFn& f) {
  const PhaseGrid& g = *f.grid;
  DistFn out(g);
  const double inv2dr = 1.0 / (2.0 * g.dr);
  for (int i = 0; i < g.n_r; ++i) {
    const int ip = (i + 1) % g.n_r;
    const int im = (i + g.n_r - 1) % g.n_r;
    for (int j = 0; j < g.n_v; ++j)
      out.at(i, j) = (f.at(ip, j) - f.at(im, j)) * inv2dr;
  }
  return out;
}

DistFn deriv_v(const DistFn& f) {
  const PhaseGrid& g = *f.grid;
  DistFn out(g);
  const double inv2dv = 1.0 / (2.0 * g.dv);
  const int m = g.n_v - 1;
  for (int i = 0; i < g.n_r; ++i) {
    out.at(i, 0) = (-3.0 * f.at(i, 0) + 4.0 * f.at(i, 1) - f.at(i, 2)) * inv2dv;
    for (int j = 1; j < m; ++j)
      out.at(i, j) = (f.at(i, j + 1) - f.at(i, j - 1)) * inv2dv;
    out.at(i, m) = (3.0 * f.at(i, m) - 4.0 * f.at(i, m - 1) + f.at(i, m - 2)) * inv2dv;
  }
  return out;
}

DistFn div_v_flux(const DistFn& gfield) {
  const PhaseGrid& g = *gfield.grid;
  DistFn out(g);
  const double invdv = 1.0 / g.dv;
  for (int i = 0; i < g.n_r; ++i) {
    // faces: 0 at the walls, arithmetic mean inside; telescoping sum makes
    // the velocity total of the result vanish identically.
    double below = 0.0;
    for (int j = 0; j < g.n_v; ++j) {
      const double above =
          (j + 1 < g.n_v) ? 0.5 * (gfield.at(i, j) + gfield.at(i, j + 1)) : 0.0;
      out.at(i, j) = (above - below) * invdv;
      below = above;
    }
  }
  return out;
}

ScalarField operator+(ScalarField x, const ScalarField& y) {
  require_same_grid(x, y);
  for (int i = 0; i < x.size(); ++i) x[i] += y[i];
  return x;
}

ScalarField operator-(ScalarField x, const ScalarField& y) {
  require_same_grid(x, y);
  for (int i = 0; i < x.size(); ++i) x[i] -= y[i];
  return x;
}

ScalarField operator*(double c, ScalarField x) {
  for (double& xi : x.a) xi *= c;
  return x;
}

ScalarField multiply(ScalarField x, const ScalarField& y) {
  require_same_grid(x, y);
  for (int i = 0; i < x.size(); ++i) x[i] *= y[i];
  return x;
}

DistFn operator+(DistFn x, const DistFn& y) {
  require_same_grid(x, y);
  for (int i = 0; i < x.size(); ++i) x.a[i] += y.a[i];
  return x;
}

DistFn operator-(DistFn x, const DistFn& y) {
  require_same_grid(x, y);
  for (int i = 0; i < x.size(); ++i) x.a[i] -= y.a[i];
  return x;
}

DistFn operator*(double c, DistFn x) {
  for (double& xi : x.a) xi *= c;
  return x;
}

DistFn multiply(DistFn x, const DistFn& y) {
  require_same_grid(x, y);
  for (int i = 0; i < x.size(); ++i) x.a[i] *= y.a[i];
  return x;
}

void axpy(double c, const ScalarField& x, ScalarField& y) {
  require_same_grid(x, y);
  for (int i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

void axpy(double c, const DistFn& x, DistFn& y) {
  require_same_grid(x, y);
  for (int i = 0; i < x.size(); ++i) y.a[i] += c * x.a[i];
}

void axpy(double c, const ExtendedState& x, ExtendedState& y) {
  axpy(c, x.rho, y.rho);
  axpy(c, x.u, y.u);
  axpy(c, x.s, y.s);
  axpy(c, x.f, y.f);
}

DistFn broadcast_r(const ScalarField& x, const PhaseGrid& g) {
  DistFn out(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j) out.at(i, j) = x[i];
  return out;
}

DistFn velocity_field(const PhaseGrid& g) {
  DistFn out(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j) out.at(i, j) = g.v[j];
  return out;
}

bool all_finite(const ScalarField& x) {
  for (double xi : x.a)
    if (!std::isfinite(xi)) return false;
  return true;
}

bool all_finite(const DistFn& f) {
  for (double fi : f.a)
    if (!std::isfinite(fi)) return false;
  return true;
}

bool all_finite(const ExtendedState& x) {
  return all_finite(x.rho) && all_finite(x.u) && all_finite(x.s) && all_finite(x.f);
}

double max_abs(const ScalarField& x) {
  double m = 0.0;
  for (double xi : x.a) m = std::max(m, std::fabs(xi));
  return m;
}

double max_abs(const DistFn& f) {
  double m = 0.0;
  for (double fi : f.a) m = std::max(m, std::fabs(fi));
  return m;
}

double max_abs_diff(const ScalarField& x, const ScalarField& y) {
  require_same_grid(x, y);
  double m = 0.0;
  for (int i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
  return m;
}

double max_abs_diff(const DistFn& x, const DistFn& y) {
  require_same_grid(x, y);
  double m = 0.0;
  for (int i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x.a[i] - y.a[i]));
  return m;
}

double rel_l2_diff(const ScalarField& x, const ScalarField& y) {
  ScalarField d = x - y;
  const double den = std::sqrt(ip_r(y, y));
  return std::sqrt(ip_r(d, d)) / std::max(den, 1e-300);
}

double rel_l2_diff(const DistFn& x, const DistFn& y) {
  DistFn d = x - y;
  const double den = std::sqrt(ip_rv(y, y));
  return std::sqrt(ip_rv(d, d)) / std::max(den, 1e-300);
}

}  // namespace mst
