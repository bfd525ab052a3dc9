#pragma once

#include <map>
#include <string>
#include <vector>

#include "tlsmap/fields.hpp"
#include "tlsmap/geometry.hpp"
#include "tlsmap/trace_fit.hpp"

namespace tlsmap {

// Sum over electrode pairs of | |E_i|/|E_j| - |gamma_i/gamma_j| | per cell.
struct ResidualMap {
  GridMeta meta;
  std::vector<double> sigma;       // dimensionless residual
  std::vector<uint8_t> valid;      // detectable and >= 3 usable pairs
  std::vector<uint8_t> pair_count; // usable pairs per cell (diagnostics)
  // Pairs whose gamma denominator survived the floor, in canonical order.
  std::vector<std::pair<Conductor, Conductor>> pairs_used;
  std::vector<std::pair<Conductor, Conductor>> pairs_skipped;

  long valid_count() const;
};

struct LocalizationResult {
  Point position;      // cell center of the minimum
  int ix = 0, iy = 0;
  double sigma_min = 0.0;
  RegionLabel region = RegionLabel::Gap;
  bool tie = false;    // several cells share the exact minimum
  long valid_cells = 0;
  // Cells with sigma <= sigma_min*(1+band) + 1e-12, row-major order.
  std::vector<std::pair<int, int>> uncertainty_cells;
  std::vector<std::pair<Conductor, Conductor>> pairs_used;
};

// Evaluates the pair-ratio residual on every mask cell. Each pair is
// oriented with the stronger response factor as denominator, so ratios stay
// in [0, 1] and a poorly measured weak factor cannot blow up its pairs. A
// pair is skipped globally when its denominator gamma is below
// ratio_floor * max|gamma|, and per cell when the denominator field is below
// ratio_floor * that map's maximum magnitude. Cells with fewer than 3 usable
// pairs are invalid.
ResidualMap residual_map(const TraceFit& fit,
                         const std::map<Conductor, FieldMap>& dc_maps,
                         const ScalarMap& mask, double ratio_floor = 1e-4);

// Same residual from explicit gamma values (ground-truth studies).
ResidualMap residual_map_from_gammas(
    const std::vector<std::pair<Conductor, double>>& gammas,
    const std::map<Conductor, FieldMap>& dc_maps, const ScalarMap& mask,
    double ratio_floor = 1e-4);

// Argmin over valid cells; exact ties resolve to the lowest row-major index
// and are flagged. Throws LocalizationError when no cell is valid.
LocalizationResult localize(const ResidualMap& rmap,
                            const CircuitLayout& layout, double band = 0.1);

// Residual map as a scalar-map file (one value per cell plus validity).
void save_residual_map(const ResidualMap& rmap, const std::string& path);

}  // namespace tlsmap
