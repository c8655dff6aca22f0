// CSV snapshot and time-series output. All numbers are printed with %.17g so
// that a written file reproduces the doubles bit-for-bit on re-read and
// reruns of the same configuration are byte-identical.
#pragma once

#include <string>
#include <vector>

#include "mst/grid.hpp"

namespace mst {

std::string format_double(double x);

// Phase-space snapshot with columns r,v,f (one row per cell, r-major).
void write_distfn_csv(const std::string& path, const DistFn& f);
// Inverse of write_distfn_csv for restart; the file must match the grid.
DistFn read_distfn_csv(const std::string& path, const PhaseGrid& g);

// Hydrodynamic snapshot with columns r,rho,u,s.
void write_hydro_csv(const std::string& path, const ScalarField& rho,
                     const ScalarField& u, const ScalarField& s);
struct HydroColumns {
  ScalarField rho;
  ScalarField u;
  ScalarField s;
};
HydroColumns read_hydro_csv(const std::string& path, const PhaseGrid& g);

// Row-oriented time series with a fixed header, used for run diagnostics.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void append(const std::vector<double>& row);
  void write(const std::string& path) const;
};

}  // namespace mst
