#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tlsmap/geometry.hpp"

namespace tlsmap {

// Shared raster metadata for field and scalar maps.
struct GridMeta {
  double spacing = 0.0;  // um
  int nx = 0, ny = 0;
  double x_min = 0.0, y_min = 0.0;  // um

  int index(int ix, int iy) const { return iy * nx + ix; }
  Point cell_center(int ix, int iy) const {
    return {x_min + (ix + 0.5) * spacing, y_min + (iy + 0.5) * spacing};
  }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }
  bool operator==(const GridMeta&) const = default;
};

inline GridMeta grid_meta(const ConductorGrid& grid) {
  return {grid.spacing, grid.nx, grid.ny, grid.x_min, grid.y_min};
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Per-cell electric field vectors. For DC electrode sources the unit is
// (V/m) per applied volt; for the qubit source it is absolute V/m (RMS).
// Field vectors are zero inside conductor cells.
struct FieldMap {
  GridMeta meta;
  std::string source;                   // conductor name or "qubit"
  std::vector<double> ex, ey;           // row-major
  std::vector<uint8_t> conductor_mask;  // 1 = cell sits on a conductor

  Vec2 at(int ix, int iy) const {
    int k = meta.index(ix, iy);
    return {ex[k], ey[k]};
  }
  double magnitude_at(int ix, int iy) const;
};

// Per-cell scalar derived from field maps (magnitude, alignment, mask, or a
// solved potential). `defined`, when non-empty, flags cells whose value is
// meaningful; undefined cells hold kUndefinedValue.
struct ScalarMap {
  GridMeta meta;
  std::string quantity;  // "potential_v", "magnitude", "alignment", "mask"
  std::vector<double> values;
  std::vector<uint8_t> defined;

  double at(int ix, int iy) const { return values[meta.index(ix, iy)]; }
  bool is_defined(int ix, int iy) const {
    return defined.empty() || defined[meta.index(ix, iy)] != 0;
  }
};

inline constexpr double kUndefinedValue = -2.0;

struct SolverOptions {
  double relaxation = 1.95;      // SOR factor, valid range [1.0, 1.95]
  double tolerance = 1e-8;       // residual threshold relative to max |V|
  long max_iterations = 1000000;  // sweep cap
  int residual_check_interval = 16;
};

// Solves the discrete Laplace equation on the vacuum cells with Dirichlet
// values from `voltages` on conductor cells (conductors absent from the map
// are held at 0 V) and a grounded ghost frame outside the domain.
// Deterministic lexicographic Gauss-Seidel sweeps with over-relaxation.
// Throws NumericsError with the final residual when the cap is reached.
ScalarMap solve_potential(const ConductorGrid& grid,
                          const std::map<Conductor, double>& voltages,
                          const SolverOptions& options = {});

// Residual used by the solver: max over vacuum cells of
// |phi_W + phi_E + phi_S + phi_N - 4 phi| / 4.
double max_laplacian_residual(const ScalarMap& potential,
                              const ConductorGrid& grid);

// E = -grad(phi) by central differences (ghost cells at 0 V), in V/m for a
// potential in volts. Conductor cells get a zero vector.
FieldMap field_from_potential(const ScalarMap& potential,
                              const ConductorGrid& grid,
                              const std::string& source);

// Unit-voltage map of one electrode (or any conductor): source at 1 V, every
// other conductor at 0 V.
FieldMap solve_field(const ConductorGrid& grid, Conductor source,
                     const SolverOptions& options = {});

// Zero-point voltage sqrt(hbar * omega_q / (2 C_q)) in volts.
double zero_point_voltage(double qubit_capacitance_ff,
                          double qubit_frequency_ghz);

// Island driven at the zero-point voltage, everything else grounded; the
// result is the qubit's RMS field in absolute V/m.
FieldMap qubit_rms_field(const ConductorGrid& grid,
                         double qubit_capacitance_ff,
                         double qubit_frequency_ghz,
                         const SolverOptions& options = {});

// Text format with exact 17-significant-digit round-trip (see save).
FieldMap load_field_map(const std::string& path, const ConductorGrid& grid);
void save_field_map(const FieldMap& map, const std::string& path);

// Text format "tlsmap-scalar-map v1"; rows are "value defined". Loading
// checks the grid the same way field maps are checked.
void save_scalar_map(const ScalarMap& map, const std::string& path);
ScalarMap load_scalar_map(const std::string& path, const ConductorGrid& grid);

ScalarMap magnitude_map(const FieldMap& map);

// Normalized dot product (a.b)/(|a||b|) per cell. Cells where either
// magnitude falls below floor_rel times that map's maximum magnitude are
// undefined (kUndefinedValue, defined mask 0).
ScalarMap alignment_map(const FieldMap& a, const FieldMap& b,
                        double floor_rel = 1e-6);

// 1 where |E_rms| exceeds e_min on a non-conductor cell, else 0. e_min = 0
// selects every non-conductor cell.
ScalarMap detectable_mask(const FieldMap& e_rms, double e_min);

// Bilinear interpolation between cell centers, clamped at the outermost
// centers. Exact at cell centers.
Vec2 sample_field(const FieldMap& map, Point p);
double sample_scalar(const ScalarMap& map, Point p);

}  // namespace tlsmap
