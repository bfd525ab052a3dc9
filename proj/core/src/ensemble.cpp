#include "tlsmap/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlsmap/errors.hpp"
#include "tlsmap/rng.hpp"

namespace tlsmap {

TlsEnsemble sample_ensemble(const CircuitLayout& layout, const ScalarMap& mask,
                            const FieldMap& e_rms, const EnsembleSpec& spec) {
  if (spec.count < 0)
    throw ConfigError("sample_ensemble: count must not be negative");
  if (!(spec.window_lo_ghz > 0) || !(spec.window_hi_ghz > spec.window_lo_ghz))
    throw ConfigError("sample_ensemble: invalid spectroscopy window");
  if (!(spec.dipole_moment_ea > 0))
    throw ConfigError("sample_ensemble: dipole moment must be positive");
  if (spec.dipole_sigma_ea < 0)
    throw ConfigError("sample_ensemble: dipole sigma must be >= 0");
  if (mask.meta != e_rms.meta)
    throw ConfigError("sample_ensemble: mask and field grids differ");
  spec.rates.validate();
  for (const auto& [region, factor] : spec.enhancement)
    if (!(factor >= 0))
      throw ConfigError("sample_ensemble: enhancement factors must be >= 0");

  TlsEnsemble ensemble;
  ensemble.spec = spec;
  if (spec.count == 0) return ensemble;

  auto enhancement_of = [&spec](RegionLabel r) {
    auto it = spec.enhancement.find(r);
    return it != spec.enhancement.end() ? it->second : 1.0;
  };

  // Candidate cells and their cumulative weights.
  struct Candidate {
    Point center;
    RegionLabel region;
    Vec2 field;
  };
  std::vector<Candidate> cells;
  std::vector<double> cumulative;
  double total = 0.0;
  for (int iy = 0; iy < mask.meta.ny; ++iy) {
    for (int ix = 0; ix < mask.meta.nx; ++ix) {
      if (mask.at(ix, iy) == 0.0) continue;
      Point center = mask.meta.cell_center(ix, iy);
      RegionLabel region = classify_region(layout, center);
      Vec2 e = e_rms.at(ix, iy);
      double w = enhancement_of(region);
      if (spec.weight_by_field_energy) w *= e.x * e.x + e.y * e.y;
      if (w <= 0.0) continue;
      total += w;
      cells.push_back({center, region, e});
      cumulative.push_back(total);
    }
  }
  if (cells.empty())
    throw ConfigError("sample_ensemble: mask selects no cells with positive weight");

  Rng rng(spec.seed);
  ensemble.defects.reserve(spec.count);
  ensemble.regions.reserve(spec.count);

  for (int n = 0; n < spec.count; ++n) {
    double u = rng.next_double() * total;
    std::size_t idx = std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                      cumulative.begin();
    idx = std::min(idx, cells.size() - 1);
    const Candidate& cell = cells[idx];

    TlsDefect tls;
    tls.position = cell.center;
    tls.rates = spec.rates;

    tls.delta_over_h = rng.uniform(spec.window_lo_ghz, spec.window_hi_ghz);
    double f0 = rng.uniform(tls.delta_over_h, spec.window_hi_ghz);
    double eps_mag =
        std::sqrt(std::max(0.0, f0 * f0 - tls.delta_over_h * tls.delta_over_h));
    tls.epsilon0_over_h = (rng.next_double() < 0.5) ? -eps_mag : eps_mag;

    double p = spec.dipole_moment_ea;
    if (spec.dipole_sigma_ea > 0) {
      do {
        p = rng.normal(spec.dipole_moment_ea, spec.dipole_sigma_ea);
      } while (p <= 0.05 * spec.dipole_moment_ea);
    }
    tls.dipole_moment = p;

    if (spec.orientation == OrientationMode::QubitField) {
      double mag = std::hypot(cell.field.x, cell.field.y);
      tls.orientation = mag > 0 ? Vec2{cell.field.x / mag, cell.field.y / mag}
                                : Vec2{1.0, 0.0};
    } else {
      double angle = rng.uniform(0.0, 2.0 * 3.141592653589793238462643383279);
      tls.orientation = {std::cos(angle), std::sin(angle)};
    }

    tls.validate();
    ensemble.defects.push_back(tls);
    ensemble.regions.push_back(cell.region);
  }
  return ensemble;
}

namespace {

using json = nlohmann::json;

double req_num(const json& doc, const char* key, const std::string& path) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_number())
    throw IoError("ensemble file " + path + ": missing numeric key '" + key +
                  "'");
  return it->get<double>();
}

}  // namespace

void save_ensemble(const TlsEnsemble& ensemble, const std::string& path) {
  const EnsembleSpec& s = ensemble.spec;
  json enh = json::object();
  for (const auto& [region, factor] : s.enhancement)
    enh[region_name(region)] = factor;
  json spec = {
      {"count", s.count},
      {"enhancement", enh},
      {"weight_by_field_energy", s.weight_by_field_energy},
      {"dipole_moment_ea", s.dipole_moment_ea},
      {"dipole_sigma_ea", s.dipole_sigma_ea},
      {"orientation",
       s.orientation == OrientationMode::QubitField ? "qubit_field" : "uniform"},
      {"rates_per_s",
       {{"gamma1_tls", s.rates.gamma1_tls},
        {"gamma2_tls", s.rates.gamma2_tls},
        {"gamma1_q", s.rates.gamma1_q},
        {"gamma2_q", s.rates.gamma2_q}}},
      {"window_lo_ghz", s.window_lo_ghz},
      {"window_hi_ghz", s.window_hi_ghz},
      {"seed", s.seed}};

  json defects = json::array();
  for (std::size_t i = 0; i < ensemble.defects.size(); ++i) {
    const TlsDefect& d = ensemble.defects[i];
    defects.push_back(
        {{"x_um", d.position.x},
         {"y_um", d.position.y},
         {"dipole_ea", d.dipole_moment},
         {"orientation", json::array({d.orientation.x, d.orientation.y})},
         {"delta_over_h_ghz", d.delta_over_h},
         {"epsilon0_over_h_ghz", d.epsilon0_over_h},
         {"region", region_name(ensemble.regions[i])}});
  }

  json doc = {{"format", "tlsmap-ensemble"},
              {"schema_version", 1},
              {"spec", spec},
              {"defects", defects}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write ensemble file: " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for ensemble file: " + path);
}

TlsEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ensemble file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::exception& e) {
    throw IoError("ensemble file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "tlsmap-ensemble")
    throw IoError("ensemble file " + path + ": unrecognized format");

  TlsEnsemble ensemble;
  const json& spec = doc.at("spec");
  EnsembleSpec& s = ensemble.spec;
  s.count = static_cast<int>(req_num(spec, "count", path));
  if (auto it = spec.find("enhancement"); it != spec.end()) {
    for (auto e = it->begin(); e != it->end(); ++e)
      s.enhancement[region_from_name(e.key())] = e.value().get<double>();
  }
  s.weight_by_field_energy = spec.value("weight_by_field_energy", true);
  s.dipole_moment_ea = req_num(spec, "dipole_moment_ea", path);
  s.dipole_sigma_ea = req_num(spec, "dipole_sigma_ea", path);
  s.orientation = spec.value("orientation", "qubit_field") == "uniform"
                      ? OrientationMode::Uniform
                      : OrientationMode::QubitField;
  const json& rates = spec.at("rates_per_s");
  s.rates.gamma1_tls = req_num(rates, "gamma1_tls", path);
  s.rates.gamma2_tls = req_num(rates, "gamma2_tls", path);
  s.rates.gamma1_q = req_num(rates, "gamma1_q", path);
  s.rates.gamma2_q = req_num(rates, "gamma2_q", path);
  s.window_lo_ghz = req_num(spec, "window_lo_ghz", path);
  s.window_hi_ghz = req_num(spec, "window_hi_ghz", path);
  s.seed = spec.value("seed", json(0)).get<uint64_t>();

  for (const json& d : doc.at("defects")) {
    TlsDefect tls;
    tls.position = {req_num(d, "x_um", path), req_num(d, "y_um", path)};
    tls.dipole_moment = req_num(d, "dipole_ea", path);
    const json& o = d.at("orientation");
    if (!o.is_array() || o.size() != 2)
      throw IoError("ensemble file " + path + ": bad orientation entry");
    tls.orientation = {o[0].get<double>(), o[1].get<double>()};
    tls.delta_over_h = req_num(d, "delta_over_h_ghz", path);
    tls.epsilon0_over_h = req_num(d, "epsilon0_over_h_ghz", path);
    tls.rates = s.rates;
    tls.validate();
    ensemble.defects.push_back(tls);
    ensemble.regions.push_back(
        region_from_name(d.value("region", "gap")));
  }
  if (static_cast<int>(ensemble.defects.size()) != s.count)
    throw IoError("ensemble file " + path + ": defect count " +
                  std::to_string(ensemble.defects.size()) +
                  " does not match spec count " + std::to_string(s.count));
  return ensemble;
}

}  // namespace tlsmap
