#include "mst/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mst {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

std::vector<double> parse_row(const std::string& line, std::size_t ncols,
                              const std::string& path) {
  std::vector<double> vals;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
  if (vals.size() != ncols)
    throw std::runtime_error("malformed row in " + path + ": " + line);
  return vals;
}

void check_coord(double got, double want, const std::string& path) {
  const double scale = std::max(1.0, std::fabs(want));
  if (std::fabs(got - want) > 1e-9 * scale)
    throw std::runtime_error("coordinate mismatch against grid in " + path);
}

}  // namespace

void write_distfn_csv(const std::string& path, const DistFn& f) {
  const PhaseGrid& g = *f.grid;
  std::ofstream out = open_out(path);
  out << "r,v,f\n";
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j)
      out << format_double(g.r[i]) << ',' << format_double(g.v[j]) << ','
          << format_double(f.at(i, j)) << '\n';
}

DistFn read_distfn_csv(const std::string& path, const PhaseGrid& g) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "r,v,f")
    throw std::runtime_error("bad header in " + path);
  DistFn f(g);
  for (int i = 0; i < g.n_r; ++i)
    for (int j = 0; j < g.n_v; ++j) {
      if (!std::getline(in, line))
        throw std::runtime_error("truncated file: " + path);
      const std::vector<double> vals = parse_row(line, 3, path);
      check_coord(vals[0], g.r[i], path);
      check_coord(vals[1], g.v[j], path);
      f.at(i, j) = vals[2];
    }
  if (std::getline(in, line) && !line.empty())
    throw std::runtime_error("trailing rows in " + path);
  return f;
}

void write_hydro_csv(const std::string& path, const ScalarField& rho,
                     const ScalarField& u, const ScalarField& s) {
  require_same_grid(rho, u);
  require_same_grid(rho, s);
  const PhaseGrid& g = *rho.grid;
  std::ofstream out = open_out(path);
  out << "r,rho,u,s\n";
  for (int i = 0; i < g.n_r; ++i)
    out << format_double(g.r[i]) << ',' << format_double(rho[i]) << ','
        << format_double(u[i]) << ',' << format_double(s[i]) << '\n';
}

HydroColumns read_hydro_csv(const std::string& path, const PhaseGrid& g) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "r,rho,u,s")
    throw std::runtime_error("bad header in " + path);
  HydroColumns h{ScalarField(g), ScalarField(g), ScalarField(g)};
  for (int i = 0; i < g.n_r; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("truncated file: " + path);
    const std::vector<double> vals = parse_row(line, 4, path);
    check_coord(vals[0], g.r[i], path);
    h.rho[i] = vals[1];
    h.u[i] = vals[2];
    h.s[i] = vals[3];
  }
  if (std::getline(in, line) && !line.empty())
    throw std::runtime_error("trailing rows in " + path);
  return h;
}

void CsvTable::append(const std::vector<double>& row) {
  if (row.size() != header.size())
    throw std::invalid_argument("CsvTable: row width does not match header");
  rows.push_back(row);
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out = open_out(path);
  for (std::size_t k = 0; k < header.size(); ++k)
    out << header[k] << (k + 1 < header.size() ? ',' : '\n');
  for (const auto& row : rows)
    for (std::size_t k = 0; k < row.size(); ++k)
      out << format_double(row[k]) << (k + 1 < row.size() ? ',' : '\n');
}

}  // namespace mst
