#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sfisim/errors.hpp"
#include "sfisim/units.hpp"

namespace sfisim {

/// Per-cell scalar permeability [m^2] and reference porosity [-].
struct PermeabilityField {
  Eigen::ArrayXd perm;
  Eigen::ArrayXd poro_ref;
};

/// Interior face between two axis-adjacent cells.
///
/// `trans` is the two-point transmissibility [m^3]. `dz` is the height
/// difference z_j - z_i of the cell centres with z positive upward, so the
/// gravity weight of phase l across the face is rho_l * g * dz [Pa].
struct Face {
  int i = -1;
  int j = -1;
  double trans = 0.0;
  double dz = 0.0;
};

/// Structured NX x NZ vertical cross-section, cell-centered.
///
/// Cells are indexed row-major with ix fastest: cell = iz*nx + ix. The z index
/// grows downward; `depth` holds cell-centre depth below the top of the model.
struct StructuredGrid {
  int nx = 0;
  int nz = 0;
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double cell_volume = 0.0;
  Eigen::ArrayXd depth;
  std::vector<Face> faces;

  int num_cells() const { return nx * nz; }
  int cell(int ix, int iz) const { return iz * nx + ix; }
};

/// Builds the grid with harmonic two-point transmissibilities.
///
/// The half-cell transmissibility of cell c across a face of area A at
/// distance d/2 from the centre is K_c*A/(d/2); the face value is the
/// harmonic combination T_i*T_j/(T_i+T_j).
inline StructuredGrid build_cartesian_grid(int nx, int nz, double dx, double dy,
                                           double dz,
                                           const PermeabilityField& perm) {
  if (nx < 1 || nz < 1)
    throw ConfigError("grid: cell counts must be at least 1");
  if (dx <= 0.0 || dy <= 0.0 || dz <= 0.0)
    throw ConfigError("grid: cell dimensions must be positive");
  const int n = nx * nz;
  if (perm.perm.size() != n)
    throw ConfigError("grid: permeability field has " +
                      std::to_string(perm.perm.size()) + " values, expected " +
                      std::to_string(n));
  if ((perm.perm <= 0.0).any())
    throw ConfigError("grid: permeability values must be positive");

  StructuredGrid g;
  g.nx = nx;
  g.nz = nz;
  g.dx = dx;
  g.dy = dy;
  g.dz = dz;
  g.cell_volume = dx * dy * dz;
  g.depth.resize(n);
  for (int iz = 0; iz < nz; ++iz)
    for (int ix = 0; ix < nx; ++ix) g.depth[g.cell(ix, iz)] = (iz + 0.5) * dz;

  auto half_trans = [&](int c, double area, double dist) {
    return perm.perm[c] * area / (0.5 * dist);
  };
  auto add_face = [&](int ci, int cj, double area, double dist) {
    const double ti = half_trans(ci, area, dist);
    const double tj = half_trans(cj, area, dist);
    Face f;
    f.i = ci;
    f.j = cj;
    f.trans = ti * tj / (ti + tj);
    f.dz = -(g.depth[cj] - g.depth[ci]);  // z = -depth
    g.faces.push_back(f);
  };

  for (int iz = 0; iz < nz; ++iz)
    for (int ix = 0; ix + 1 < nx; ++ix)
      add_face(g.cell(ix, iz), g.cell(ix + 1, iz), dy * dz, dx);
  for (int iz = 0; iz + 1 < nz; ++iz)
    for (int ix = 0; ix < nx; ++ix)
      add_face(g.cell(ix, iz), g.cell(ix, iz + 1), dx * dy, dz);
  return g;
}

namespace detail {

/// Parses a row-major scalar field, one value per cell, comma- or
/// whitespace-separated. Errors name the grid row/column of the bad entry.
inline Eigen::ArrayXd parse_cell_field(std::istream& in, int nx, int nz,
                                       const std::string& what) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  const std::size_t expected = static_cast<std::size_t>(nx) * nz;
  if (tokens.size() != expected)
    throw IngestionError(what + ": expected " + std::to_string(expected) +
                         " values, found " + std::to_string(tokens.size()));
  Eigen::ArrayXd out(static_cast<Eigen::Index>(expected));
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const int row = static_cast<int>(k) / nx + 1;
    const int col = static_cast<int>(k) % nx + 1;
    const std::string where =
        " at row " + std::to_string(row) + ", column " + std::to_string(col);
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tokens[k], &pos);
    } catch (const std::exception&) {
      throw IngestionError(what + ": non-numeric value '" + tokens[k] + "'" +
                           where);
    }
    if (pos != tokens[k].size())
      throw IngestionError(what + ": non-numeric value '" + tokens[k] + "'" +
                           where);
    if (v <= 0.0)
      throw IngestionError(what + ": non-positive value '" + tokens[k] + "'" +
                           where);
    out[static_cast<Eigen::Index>(k)] = v;
  }
  return out;
}

inline std::ifstream open_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// Reads a permeability CSV in millidarcy, converted to m^2. Porosity is not
/// part of the file; the returned field leaves `poro_ref` empty for the case
/// setup to fill.
inline PermeabilityField load_permeability_csv(const std::string& path, int nx,
                                               int nz) {
  auto in = detail::open_field_file(path);
  PermeabilityField f;
  f.perm = detail::parse_cell_field(in, nx, nz, path) * units::millidarcy;
  return f;
}

/// Reads a porosity CSV (dimensionless, each value in (0,1)).
inline Eigen::ArrayXd load_porosity_csv(const std::string& path, int nx,
                                        int nz) {
  auto in = detail::open_field_file(path);
  Eigen::ArrayXd poro = detail::parse_cell_field(in, nx, nz, path);
  if ((poro >= 1.0).any())
    throw IngestionError(path + ": porosity values must be below 1");
  return poro;
}

}  // namespace sfisim
