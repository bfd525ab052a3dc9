#include "tlsmap/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tlsmap/constants.hpp"
#include "tlsmap/errors.hpp"

namespace tlsmap {
namespace {

void require_same_grid(const GridMeta& a, const GridMeta& b,
                       const std::string& what) {
  if (a == b) return;
  std::ostringstream os;
  os << what << ": grid mismatch (" << a.nx << "x" << a.ny << " @ " << a.spacing
     << " um vs " << b.nx << "x" << b.ny << " @ " << b.spacing << " um)";
  throw ConfigError(os.str());
}

}  // namespace

double FieldMap::magnitude_at(int ix, int iy) const {
  int k = meta.index(ix, iy);
  return std::hypot(ex[k], ey[k]);
}

ScalarMap solve_potential(const ConductorGrid& grid,
                          const std::map<Conductor, double>& voltages,
                          const SolverOptions& options) {
  if (options.relaxation < 1.0 || options.relaxation > 1.95)
    throw ConfigError("solver relaxation factor must be in [1.0, 1.95]");
  if (!(options.tolerance > 0.0))
    throw ConfigError("solver tolerance must be positive");

  const int nx = grid.nx, ny = grid.ny;
  const int pnx = nx + 2;  // ghost ring at 0 V removes edge branches
  auto pidx = [pnx](int ix, int iy) { return (iy + 1) * pnx + (ix + 1); };

  std::vector<double> phi(static_cast<std::size_t>(pnx) * (ny + 2), 0.0);
  std::vector<uint8_t> fixed(phi.size(), 0);

  double scale = 0.0;
  for (const auto& [conductor, v] : voltages) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;

  bool any_conductor = false;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      Conductor c = grid.at(ix, iy);
      if (c == Conductor::Vacuum) continue;
      any_conductor = true;
      auto it = voltages.find(c);
      phi[pidx(ix, iy)] = (it != voltages.end()) ? it->second : 0.0;
      fixed[pidx(ix, iy)] = 1;
    }
  }
  if (!any_conductor)
    throw ConfigError("solve_potential: grid has no conductor cells");

  const double omega = options.relaxation;
  const double target = options.tolerance * scale;
  const int check_every = std::max(1, options.residual_check_interval);

  auto residual = [&]() {
    double worst = 0.0;
    for (int iy = 0; iy < ny; ++iy) {
      const int row = pidx(0, iy);
      for (int ix = 0; ix < nx; ++ix) {
        int k = row + ix;
        if (fixed[k]) continue;
        double r = 0.25 * (phi[k - 1] + phi[k + 1] + phi[k - pnx] + phi[k + pnx]) -
                   phi[k];
        worst = std::max(worst, std::abs(r));
      }
    }
    return worst;
  };

  long sweeps = 0;
  double last_residual = residual();
  while (last_residual > target) {
    if (sweeps >= options.max_iterations) {
      std::ostringstream os;
      os << "solve_potential: no convergence after " << sweeps
         << " sweeps (residual " << last_residual << ", target " << target << ")";
      throw NumericsError(os.str());
    }
    for (int iy = 0; iy < ny; ++iy) {
      const int row = pidx(0, iy);
      for (int ix = 0; ix < nx; ++ix) {
        int k = row + ix;
        if (fixed[k]) continue;
        double gs = 0.25 * (phi[k - 1] + phi[k + 1] + phi[k - pnx] + phi[k + pnx]);
        phi[k] += omega * (gs - phi[k]);
      }
    }
    ++sweeps;
    if (sweeps % check_every == 0 || sweeps >= options.max_iterations)
      last_residual = residual();
  }

  ScalarMap out;
  out.meta = grid_meta(grid);
  out.quantity = "potential_v";
  out.values.resize(grid.cell_count());
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      out.values[out.meta.index(ix, iy)] = phi[pidx(ix, iy)];
  return out;
}

double max_laplacian_residual(const ScalarMap& potential,
                              const ConductorGrid& grid) {
  require_same_grid(potential.meta, grid_meta(grid), "max_laplacian_residual");
  const int nx = grid.nx, ny = grid.ny;
  auto value = [&](int ix, int iy) {
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return 0.0;
    return potential.at(ix, iy);
  };
  double worst = 0.0;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      if (grid.at(ix, iy) != Conductor::Vacuum) continue;
      double r = 0.25 * (value(ix - 1, iy) + value(ix + 1, iy) +
                         value(ix, iy - 1) + value(ix, iy + 1)) -
                 value(ix, iy);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

FieldMap field_from_potential(const ScalarMap& potential,
                              const ConductorGrid& grid,
                              const std::string& source) {
  require_same_grid(potential.meta, grid_meta(grid), "field_from_potential");
  const int nx = grid.nx, ny = grid.ny;
  const double inv_2h = 1.0 / (2.0 * grid.spacing * kMicron);  // 1/m

  FieldMap map;
  map.meta = grid_meta(grid);
  map.source = source;
  map.ex.assign(map.meta.cell_count(), 0.0);
  map.ey.assign(map.meta.cell_count(), 0.0);
  map.conductor_mask.assign(map.meta.cell_count(), 0);

  auto value = [&](int ix, int iy) {
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return 0.0;
    return potential.at(ix, iy);
  };
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      int k = map.meta.index(ix, iy);
      if (grid.at(ix, iy) != Conductor::Vacuum) {
        map.conductor_mask[k] = 1;
        continue;
      }
      map.ex[k] = -(value(ix + 1, iy) - value(ix - 1, iy)) * inv_2h;
      map.ey[k] = -(value(ix, iy + 1) - value(ix, iy - 1)) * inv_2h;
    }
  }
  return map;
}

FieldMap solve_field(const ConductorGrid& grid, Conductor source,
                     const SolverOptions& options) {
  if (source == Conductor::Vacuum)
    throw ConfigError("solve_field: source must be a conductor");
  bool has_source = false, has_other = false;
  for (Conductor c : grid.labels) {
    if (c == source) has_source = true;
    else if (c != Conductor::Vacuum) has_other = true;
  }
  if (!has_source)
    throw ConfigError("solve_field: grid contains no cells of source conductor '" +
                      conductor_name(source) + "'");
  if (!has_other)
    throw ConfigError("solve_field: grid contains no grounded counter-conductor");

  ScalarMap phi = solve_potential(grid, {{source, 1.0}}, options);
  return field_from_potential(phi, grid, conductor_name(source));
}

double zero_point_voltage(double qubit_capacitance_ff,
                          double qubit_frequency_ghz) {
  if (!(qubit_capacitance_ff > 0.0))
    throw ConfigError("qubit capacitance must be positive");
  if (!(qubit_frequency_ghz > 0.0))
    throw ConfigError("qubit frequency must be positive");
  double c = qubit_capacitance_ff * kFemtofarad;
  double omega = kTwoPi * qubit_frequency_ghz * kGigahertz;
  return std::sqrt(kHbar * omega / (2.0 * c));
}

FieldMap qubit_rms_field(const ConductorGrid& grid,
                         double qubit_capacitance_ff,
                         double qubit_frequency_ghz,
                         const SolverOptions& options) {
  double vzpf = zero_point_voltage(qubit_capacitance_ff, qubit_frequency_ghz);
  bool has_island = false;
  for (Conductor c : grid.labels)
    if (c == Conductor::Island) { has_island = true; break; }
  if (!has_island)
    throw ConfigError("qubit_rms_field: grid contains no island cells");

  ScalarMap phi = solve_potential(grid, {{Conductor::Island, vzpf}}, options);
  return field_from_potential(phi, grid, "qubit");
}

ScalarMap magnitude_map(const FieldMap& map) {
  ScalarMap out;
  out.meta = map.meta;
  out.quantity = "magnitude";
  out.values.resize(map.ex.size());
  for (std::size_t k = 0; k < map.ex.size(); ++k)
    out.values[k] = std::hypot(map.ex[k], map.ey[k]);
  return out;
}

ScalarMap alignment_map(const FieldMap& a, const FieldMap& b, double floor_rel) {
  require_same_grid(a.meta, b.meta, "alignment_map");
  ScalarMap out;
  out.meta = a.meta;
  out.quantity = "alignment";
  out.values.assign(a.ex.size(), kUndefinedValue);
  out.defined.assign(a.ex.size(), 0);

  double max_a = 0.0, max_b = 0.0;
  for (std::size_t k = 0; k < a.ex.size(); ++k) {
    max_a = std::max(max_a, std::hypot(a.ex[k], a.ey[k]));
    max_b = std::max(max_b, std::hypot(b.ex[k], b.ey[k]));
  }
  double floor_a = floor_rel * max_a;
  double floor_b = floor_rel * max_b;

  for (std::size_t k = 0; k < a.ex.size(); ++k) {
    double ma = std::hypot(a.ex[k], a.ey[k]);
    double mb = std::hypot(b.ex[k], b.ey[k]);
    if (ma < floor_a || mb < floor_b || ma == 0.0 || mb == 0.0) continue;
    double dot = (a.ex[k] * b.ex[k] + a.ey[k] * b.ey[k]) / (ma * mb);
    out.values[k] = std::clamp(dot, -1.0, 1.0);
    out.defined[k] = 1;
  }
  return out;
}

ScalarMap detectable_mask(const FieldMap& e_rms, double e_min) {
  if (e_min < 0.0) throw ConfigError("detectable_mask: e_min must be >= 0");
  ScalarMap out;
  out.meta = e_rms.meta;
  out.quantity = "mask";
  out.values.assign(e_rms.ex.size(), 0.0);
  for (std::size_t k = 0; k < e_rms.ex.size(); ++k) {
    if (e_rms.conductor_mask[k]) continue;
    double mag = std::hypot(e_rms.ex[k], e_rms.ey[k]);
    if (mag > e_min || e_min <= 0.0) out.values[k] = 1.0;
  }
  return out;
}

namespace {

struct BilinearCell {
  int i0, j0;
  double tx, ty;
};

BilinearCell locate(const GridMeta& meta, Point p) {
  double u = (p.x - meta.x_min) / meta.spacing - 0.5;
  double v = (p.y - meta.y_min) / meta.spacing - 0.5;
  double ui = std::clamp(std::floor(u), 0.0, static_cast<double>(meta.nx - 2));
  double vi = std::clamp(std::floor(v), 0.0, static_cast<double>(meta.ny - 2));
  int i0 = meta.nx > 1 ? static_cast<int>(ui) : 0;
  int j0 = meta.ny > 1 ? static_cast<int>(vi) : 0;
  double tx = meta.nx > 1 ? std::clamp(u - i0, 0.0, 1.0) : 0.0;
  double ty = meta.ny > 1 ? std::clamp(v - j0, 0.0, 1.0) : 0.0;
  return {i0, j0, tx, ty};
}

double lerp2(double v00, double v10, double v01, double v11, double tx,
             double ty) {
  double a = v00 + (v10 - v00) * tx;
  double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

}  // namespace

Vec2 sample_field(const FieldMap& map, Point p) {
  BilinearCell c = locate(map.meta, p);
  int i1 = std::min(c.i0 + 1, map.meta.nx - 1);
  int j1 = std::min(c.j0 + 1, map.meta.ny - 1);
  int k00 = map.meta.index(c.i0, c.j0), k10 = map.meta.index(i1, c.j0);
  int k01 = map.meta.index(c.i0, j1), k11 = map.meta.index(i1, j1);
  return {lerp2(map.ex[k00], map.ex[k10], map.ex[k01], map.ex[k11], c.tx, c.ty),
          lerp2(map.ey[k00], map.ey[k10], map.ey[k01], map.ey[k11], c.tx, c.ty)};
}

double sample_scalar(const ScalarMap& map, Point p) {
  BilinearCell c = locate(map.meta, p);
  int i1 = std::min(c.i0 + 1, map.meta.nx - 1);
  int j1 = std::min(c.j0 + 1, map.meta.ny - 1);
  return lerp2(map.at(c.i0, c.j0), map.at(i1, c.j0), map.at(c.i0, j1),
               map.at(i1, j1), c.tx, c.ty);
}

}  // namespace tlsmap
