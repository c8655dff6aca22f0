// Discretization substrate: periodic position cells, wall-bounded velocity
// cells, midpoint quadrature, and the difference operators everything else
// is built from.
#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mst {

// 1D position x 1D velocity phase-space grid. Position is periodic on
// [0, length_r); velocity lives on [-v_max, v_max] with zero-flux walls.
// Both directions use cell-centered nodes, so the velocity nodes come in
// +/- pairs and midpoint sums of odd integrands cancel exactly.
struct PhaseGrid {
  int n_r = 0;
  int n_v = 0;
  double length_r = 0.0;
  double v_max = 0.0;
  double dr = 0.0;
  double dv = 0.0;
  std::vector<double> r;
  std::vector<double> v;

  PhaseGrid() = default;
  PhaseGrid(int nr, int nv, double lr, double vmax);

  // Coordinate of the face between velocity cells j and j+1.
  double v_face(int j) const { return -v_max + (j + 1) * dv; }

  bool same_as(const PhaseGrid& o) const {
    return n_r == o.n_r && n_v == o.n_v && length_r == o.length_r &&
           v_max == o.v_max;
  }
};

// Field over position cells.
struct ScalarField {
  const PhaseGrid* grid = nullptr;
  std::vector<double> a;

  ScalarField() = default;
  explicit ScalarField(const PhaseGrid& g) : grid(&g), a(g.n_r, 0.0) {}

  double& operator[](int i) { return a[i]; }
  double operator[](int i) const { return a[i]; }
  int size() const { return static_cast<int>(a.size()); }
};

// Field over phase-space cells, row-major in position: index (i,j) is
// position cell i, velocity cell j.
struct DistFn {
  const PhaseGrid* grid = nullptr;
  std::vector<double> a;

  DistFn() = default;
  explicit DistFn(const PhaseGrid& g)
      : grid(&g), a(static_cast<std::size_t>(g.n_r) * g.n_v, 0.0) {}

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * grid->n_v + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * grid->n_v + j]; }
  int size() const { return static_cast<int>(a.size()); }
};

// State carried by the moment hierarchy: hydrodynamic densities plus the
// distribution function. Also reused as the gradient container for
// functionals of this state.
struct ExtendedState {
  ScalarField rho;
  ScalarField u;
  ScalarField s;
  DistFn f;

  ExtendedState() = default;
  explicit ExtendedState(const PhaseGrid& g) : rho(g), u(g), s(g), f(g) {}
};

struct Moments {
  ScalarField rho;  // number density, velocity integral of f
  ScalarField u;    // momentum density, velocity integral of v f
  ScalarField s;    // entropy density, velocity integral of eta(f)
};

void require_same_grid(const ScalarField& x, const ScalarField& y);
void require_same_grid(const DistFn& x, const DistFn& y);

// ---------------------------------------------------------------------------
// Quadrature. Midpoint rule in both directions: cell value times cell width.
// Exact for polynomials of degree 1 per direction and spectrally accurate
// for smooth integrands that decay before the velocity walls.
// ---------------------------------------------------------------------------

double integrate_r(const ScalarField& x);
ScalarField integrate_v(const DistFn& f);
double integrate_rv(const DistFn& f);

// Velocity integral of w(v) f(r,v) for a pointwise weight.
ScalarField integrate_v_weighted(const DistFn& f,
                                 const std::function<double(double)>& w);

Moments moments(const DistFn& f, const std::function<double(double)>& eta);

// Quadrature-weighted inner products (the discrete L2 pairings used for all
// functional-derivative identities).
double ip_r(const ScalarField& x, const ScalarField& y);
double ip_rv(const DistFn& x, const DistFn& y);

// ---------------------------------------------------------------------------
// Difference operators.
// ---------------------------------------------------------------------------

// Periodic second-order central difference in position. Skew-symmetric under
// ip_r, so <d_dr a, b> = -<a, d_dr b> and its column sums vanish exactly;
// it doubles as the conservative position divergence.
ScalarField deriv_r(const ScalarField& x);
DistFn deriv_r(const DistFn& f);

// Central difference in velocity with second-order one-sided rows at the two
// walls. The one-sided closure is exact on quadratics, so derivatives of
// kinetic-energy-type integrands carry no wall error.
DistFn deriv_v(const DistFn& f);

// Conservative velocity divergence of a flux G: arithmetic-mean face values
// with zero flux through both walls. The velocity sum of the result is
// exactly zero for any G, and in the interior it reduces to the central
// difference.
DistFn div_v_flux(const DistFn& g);

// ---------------------------------------------------------------------------
// Elementwise helpers.
// ---------------------------------------------------------------------------

ScalarField operator+(ScalarField x, const ScalarField& y);
ScalarField operator-(ScalarField x, const ScalarField& y);
ScalarField operator*(double c, ScalarField x);
ScalarField multiply(ScalarField x, const ScalarField& y);
DistFn operator+(DistFn x, const DistFn& y);
DistFn operator-(DistFn x, const DistFn& y);
DistFn operator*(double c, DistFn x);
DistFn multiply(DistFn x, const DistFn& y);

// y += c * x, the only mutating update the integrators need.
void axpy(double c, const ScalarField& x, ScalarField& y);
void axpy(double c, const DistFn& x, DistFn& y);
void axpy(double c, const ExtendedState& x, ExtendedState& y);

// Broadcast a position field across velocity cells.
DistFn broadcast_r(const ScalarField& x, const PhaseGrid& g);
// Distribution-shaped field of the velocity coordinate itself.
DistFn velocity_field(const PhaseGrid& g);

bool all_finite(const ScalarField& x);
bool all_finite(const DistFn& f);
bool all_finite(const ExtendedState& x);

double max_abs(const ScalarField& x);
double max_abs(const DistFn& f);
double max_abs_diff(const ScalarField& x, const ScalarField& y);
double max_abs_diff(const DistFn& x, const DistFn& y);

// Relative L2 distance sqrt(ip(x-y,x-y)) / max(sqrt(ip(y,y)), floor).
double rel_l2_diff(const ScalarField& x, const ScalarField& y);
double rel_l2_diff(const DistFn& x, const DistFn& y);

}  // namespace mst
