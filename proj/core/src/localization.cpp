#include "tlsmap/localization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tlsmap/errors.hpp"

namespace tlsmap {

long ResidualMap::valid_count() const {
  long n = 0;
  for (uint8_t v : valid) n += v;
  return n;
}

ResidualMap residual_map_from_gammas(
    const std::vector<std::pair<Conductor, double>>& gammas,
    const std::map<Conductor, FieldMap>& dc_maps, const ScalarMap& mask,
    double ratio_floor) {
  if (gammas.size() < 2)
    throw ConfigError("residual_map: need response factors for >= 2 electrodes");
  bool any_mask_cell = false;
  for (double v : mask.values)
    if (v != 0.0) { any_mask_cell = true; break; }
  if (!any_mask_cell) throw ConfigError("residual_map: mask is empty");

  struct ElectrodeData {
    Conductor id;
    double gamma_abs;
    const FieldMap* map;
    double max_mag;
  };
  std::vector<ElectrodeData> elec;
  double max_gamma = 0.0;
  for (const auto& [id, gamma] : gammas) {
    auto it = dc_maps.find(id);
    if (it == dc_maps.end())
      throw ConfigError("residual_map: missing field map for '" +
                        conductor_name(id) + "'");
    if (!(it->second.meta == mask.meta))
      throw ConfigError("residual_map: field map and mask grids differ");
    double max_mag = 0.0;
    const FieldMap& m = it->second;
    for (std::size_t k = 0; k < m.ex.size(); ++k)
      max_mag = std::max(max_mag, std::hypot(m.ex[k], m.ey[k]));
    elec.push_back({id, std::abs(gamma), &it->second, max_mag});
    max_gamma = std::max(max_gamma, std::abs(gamma));
  }
  std::sort(elec.begin(), elec.end(), [](const auto& a, const auto& b) {
    return static_cast<int>(a.id) < static_cast<int>(b.id);
  });

  ResidualMap rmap;
  rmap.meta = mask.meta;
  rmap.sigma.assign(mask.values.size(), 0.0);
  rmap.valid.assign(mask.values.size(), 0);
  rmap.pair_count.assign(mask.values.size(), 0);

  // Each unordered pair is oriented with the stronger response factor in the
  // denominator. A ratio against a weak denominator amplifies that factor's
  // estimation error by the ratio itself; oriented this way every ratio stays
  // in [0, 1] and its uncertainty is set by the best-measured factor.
  struct PairData {
    std::size_t i, j;     // numerator, denominator
    double gamma_ratio;   // |gamma_i / gamma_j| <= 1
    double field_floor_j; // per-cell denominator cutoff
  };
  std::vector<PairData> pairs;
  for (std::size_t a = 0; a < elec.size(); ++a) {
    for (std::size_t b = a + 1; b < elec.size(); ++b) {
      std::size_t i = a, j = b;
      if (elec[j].gamma_abs < elec[i].gamma_abs) std::swap(i, j);
      if (elec[j].gamma_abs < ratio_floor * max_gamma) {
        rmap.pairs_skipped.push_back({elec[a].id, elec[b].id});
        continue;
      }
      pairs.push_back({i, j, elec[i].gamma_abs / elec[j].gamma_abs,
                       ratio_floor * elec[j].max_mag});
      rmap.pairs_used.push_back({elec[a].id, elec[b].id});
    }
  }

  for (std::size_t k = 0; k < mask.values.size(); ++k) {
    if (mask.values[k] == 0.0) continue;
    double sigma = 0.0;
    int used = 0;
    for (const PairData& pair : pairs) {
      const FieldMap& mi = *elec[pair.i].map;
      const FieldMap& mj = *elec[pair.j].map;
      double ej = std::hypot(mj.ex[k], mj.ey[k]);
      if (ej < pair.field_floor_j || ej == 0.0) continue;
      double ei = std::hypot(mi.ex[k], mi.ey[k]);
      sigma += std::abs(ei / ej - pair.gamma_ratio);
      ++used;
    }
    rmap.pair_count[k] = static_cast<uint8_t>(std::min(used, 255));
    if (used >= 3) {
      rmap.sigma[k] = sigma;
      rmap.valid[k] = 1;
    }
  }
  return rmap;
}

ResidualMap residual_map(const TraceFit& fit,
                         const std::map<Conductor, FieldMap>& dc_maps,
                         const ScalarMap& mask, double ratio_floor) {
  std::vector<std::pair<Conductor, double>> gammas;
  for (const GammaEstimate& g : fit.gammas)
    gammas.push_back({g.electrode, g.value});
  return residual_map_from_gammas(gammas, dc_maps, mask, ratio_floor);
}

LocalizationResult localize(const ResidualMap& rmap,
                            const CircuitLayout& layout, double band) {
  long best_idx = -1;
  double best_sigma = 0.0;
  bool tie = false;
  long valid_cells = 0;
  for (std::size_t k = 0; k < rmap.sigma.size(); ++k) {
    if (!rmap.valid[k]) continue;
    ++valid_cells;
    if (best_idx < 0 || rmap.sigma[k] < best_sigma) {
      best_idx = static_cast<long>(k);
      best_sigma = rmap.sigma[k];
      tie = false;
    } else if (rmap.sigma[k] == best_sigma) {
      tie = true;
    }
  }
  if (best_idx < 0)
    throw LocalizationError(
        "localize: no valid cells (response-factor pattern inconsistent with "
        "every detectable position at this threshold)");

  LocalizationResult result;
  result.ix = static_cast<int>(best_idx % rmap.meta.nx);
  result.iy = static_cast<int>(best_idx / rmap.meta.nx);
  result.position = rmap.meta.cell_center(result.ix, result.iy);
  result.sigma_min = best_sigma;
  result.tie = tie;
  result.valid_cells = valid_cells;
  result.region = classify_region(layout, result.position);
  result.pairs_used = rmap.pairs_used;

  double cutoff = best_sigma * (1.0 + band) + 1e-12;
  for (std::size_t k = 0; k < rmap.sigma.size(); ++k) {
    if (rmap.valid[k] && rmap.sigma[k] <= cutoff)
      result.uncertainty_cells.push_back(
          {static_cast<int>(k % rmap.meta.nx),
           static_cast<int>(k / rmap.meta.nx)});
  }
  return result;
}

void save_residual_map(const ResidualMap& rmap, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write residual-map file: " + path);
  char buf[32];
  out << "tlsmap-scalar-map v1\n";
  out << "quantity pair_ratio_residual\n";
  std::snprintf(buf, sizeof(buf), "%.17g", rmap.meta.spacing);
  out << "spacing_um " << buf << '\n';
  out << "nx " << rmap.meta.nx << '\n';
  out << "ny " << rmap.meta.ny << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", rmap.meta.x_min);
  out << "x_min_um " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", rmap.meta.y_min);
  out << "y_min_um " << buf << '\n';
  out << "data\n";
  for (std::size_t k = 0; k < rmap.sigma.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", rmap.sigma[k]);
    out << buf << ' ' << static_cast<int>(rmap.valid[k]) << '\n';
  }
  if (!out) throw IoError("write failed for residual-map file: " + path);
}

}  // namespace tlsmap
