#include "tlsmap/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlsmap/analysis.hpp"
#include "tlsmap/constants.hpp"
#include "tlsmap/errors.hpp"
#include "tlsmap/parallel.hpp"
#include "tlsmap/rng.hpp"
#include "tlsmap/scan.hpp"
#include "tlsmap/trace_fit.hpp"

namespace tlsmap {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string electrode_file(Conductor e) {
  return "field_" + conductor_name(e) + ".txt";
}

CircuitLayout layout_from_run(const std::string& out) {
  return load_layout(join(out, "layout.json"));
}

ConductorGrid grid_from_run(const RunConfig& config, const std::string& out,
                            CircuitLayout* layout_out = nullptr) {
  CircuitLayout layout = layout_from_run(out);
  ConductorGrid grid = rasterize(layout, config.spacing_um);
  if (layout_out) *layout_out = std::move(layout);
  return grid;
}

std::map<Conductor, FieldMap> load_dc_maps(const RunConfig& config,
                                           const std::string& out,
                                           const ConductorGrid& grid) {
  std::map<Conductor, FieldMap> maps;
  for (Conductor e : config.electrode_order)
    maps[e] = load_field_map(join(out, electrode_file(e)), grid);
  return maps;
}

std::string format_g(double v, const char* spec = "%.9g") {
  char buf[40];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string scan_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scan_%04d.txt", index);
  return buf;
}

// Scan artifacts in name order; names are zero-padded so this is scan order.
std::vector<std::string> list_scan_files(const std::string& out) {
  static const std::regex pattern(R"(scan_\d+\.txt)");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (std::regex_match(name, pattern)) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  return names;
}

void require_artifact(const std::string& out, const std::string& name,
                      const std::string& producing_stage) {
  if (!fs::exists(join(out, name)))
    throw IoError("missing artifact '" + name + "' in " + out + "; run the " +
                  producing_stage + " stage first");
}

std::vector<double> e_min_values(const RunConfig& config) {
  std::vector<double> values = config.e_min_grid_v_per_m;
  values.push_back(config.e_min_v_per_m);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

}  // namespace

uint64_t fnv1a64_string(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for hashing: " + path);
  uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

void save_locations_jsonl(const std::vector<LocationRecord>& records,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write locations file: " + path);
  for (const LocationRecord& r : records) {
    json j{{"fit_index", r.fit_index},
           {"e_min_v_per_m", r.e_min},
           {"status", r.ok ? "ok" : "no_valid_cells"}};
    if (r.ok) {
      j["x_um"] = r.position.x;
      j["y_um"] = r.position.y;
      j["ix"] = r.ix;
      j["iy"] = r.iy;
      j["sigma_min"] = r.sigma_min;
      j["region"] = region_name(r.region);
      j["tie"] = r.tie;
      j["valid_cells"] = r.valid_cells;
      j["uncertainty_cells"] = r.uncertainty_cells;
      j["pairs_used"] = r.pairs_used;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for locations file: " + path);
}

std::vector<LocationRecord> load_locations_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open locations file: " + path);
  std::vector<LocationRecord> records;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": invalid JSON record: " + e.what());
    }
    LocationRecord r;
    r.fit_index = j.at("fit_index").get<int>();
    r.e_min = j.at("e_min_v_per_m").get<double>();
    r.ok = j.at("status").get<std::string>() == "ok";
    if (r.ok) {
      r.position = {j.at("x_um").get<double>(), j.at("y_um").get<double>()};
      r.ix = j.at("ix").get<int>();
      r.iy = j.at("iy").get<int>();
      r.sigma_min = j.at("sigma_min").get<double>();
      r.region = region_from_name(j.at("region").get<std::string>());
      r.tie = j.at("tie").get<bool>();
      r.valid_cells = j.at("valid_cells").get<long>();
      r.uncertainty_cells = j.at("uncertainty_cells").get<long>();
      r.pairs_used = j.at("pairs_used").get<long>();
    }
    records.push_back(r);
  }
  return records;
}

std::vector<std::string> stage_fields(const RunConfig& config,
                                      const std::string& out) {
  fs::create_directories(out);
  CircuitLayout layout = load_layout(config.resolved_layout_path());
  validate_layout(layout);
  save_layout(layout, join(out, "layout.json"));
  ConductorGrid grid = rasterize(layout, config.spacing_um);

  // One solve per electrode plus the qubit mode, independent problems.
  const int n_sources = static_cast<int>(config.electrode_order.size());
  std::vector<FieldMap> maps(n_sources + 1);
  parallel_for(n_sources + 1, config.jobs, [&](std::size_t k) {
    if (k < static_cast<std::size_t>(n_sources))
      maps[k] = solve_field(grid, config.electrode_order[k], config.solver);
    else
      maps[k] = qubit_rms_field(grid, config.qubit_capacitance_ff,
                                config.qubit_frequency_ghz, config.solver);
  });
  for (int k = 0; k < n_sources; ++k)
    save_field_map(maps[k], join(out, electrode_file(config.electrode_order[k])));
  const FieldMap& e_rms = maps[n_sources];
  save_field_map(e_rms, join(out, "field_qubit.txt"));

  for (int k = 0; k < n_sources; ++k) {
    ScalarMap align = alignment_map(maps[k], e_rms);
    align.quantity = "alignment_" + conductor_name(config.electrode_order[k]) +
                     "_vs_qubit";
    save_scalar_map(align, join(out, "alignment_" +
                                          conductor_name(config.electrode_order[k]) +
                                          "_vs_qubit.txt"));
  }

  for (const RunConfig::CutLine& cut : config.cut_lines) {
    std::ofstream csv(join(out, "cut_" + cut.name + ".csv"));
    if (!csv) throw IoError("cannot write cut-line file for " + cut.name);
    csv << "s_um,x_um,y_um,e_qubit_v_per_m";
    for (Conductor e : config.electrode_order)
      csv << ',' << conductor_name(e) << "_v_per_m_per_v";
    csv << '\n';
    double dx = cut.b.x - cut.a.x, dy = cut.b.y - cut.a.y;
    double length = std::hypot(dx, dy);
    for (int i = 0; i < cut.samples; ++i) {
      double t = static_cast<double>(i) / (cut.samples - 1);
      Point p{cut.a.x + t * dx, cut.a.y + t * dy};
      Vec2 eq = sample_field(e_rms, p);
      csv << format_g(t * length) << ',' << format_g(p.x) << ','
          << format_g(p.y) << ',' << format_g(std::hypot(eq.x, eq.y));
      for (int k = 0; k < n_sources; ++k) {
        Vec2 e = sample_field(maps[k], p);
        csv << ',' << format_g(std::hypot(e.x, e.y));
      }
      csv << '\n';
    }
  }
  return {};
}

std::vector<std::string> stage_synthesize(const RunConfig& config,
                                          const std::string& out) {
  require_artifact(out, "layout.json", "fields");
  require_artifact(out, "field_qubit.txt", "fields");
  CircuitLayout layout;
  ConductorGrid grid = grid_from_run(config, out, &layout);
  FieldMap e_rms = load_field_map(join(out, "field_qubit.txt"), grid);

  ScalarMap mask = detectable_mask(e_rms, config.e_min_v_per_m);
  save_scalar_map(mask, join(out, "mask.txt"));

  TlsEnsemble ensemble = sample_ensemble(layout, mask, e_rms,
                                         config.ensemble_spec());
  save_ensemble(ensemble, join(out, "ensemble.json"));

  std::vector<std::string> warnings;
  if (ensemble.defects.empty())
    warnings.push_back("ensemble is empty: downstream stages will produce "
                       "empty outputs");
  return warnings;
}

std::vector<std::string> stage_simulate(const RunConfig& config,
                                        const std::string& out) {
  require_artifact(out, "ensemble.json", "synthesize");
  CircuitLayout layout;
  ConductorGrid grid = grid_from_run(config, out, &layout);
  FieldMap e_rms = load_field_map(join(out, "field_qubit.txt"), grid);
  std::map<Conductor, FieldMap> dc_maps = load_dc_maps(config, out, grid);
  TlsEnsemble ensemble = load_ensemble(join(out, "ensemble.json"));

  VoltageSchedule schedule =
      build_schedule(config.v_start_v, config.v_end_v, config.segment_size_v,
                     config.step_size_v, config.electrode_order);
  std::vector<double> probe = frequency_grid(
      config.window_lo_ghz, config.window_hi_ghz, config.freq_step_ghz);
  RateSet qubit_rates = config.qubit_rates();

  std::vector<std::string> warnings;
  const int total = static_cast<int>(ensemble.defects.size());
  if (total == 0) {
    warnings.push_back("no defects to simulate: no scan files written");
    return warnings;
  }

  const int per_scan = config.tls_per_scan;
  const int n_scans = (total + per_scan - 1) / per_scan;

  // Defects with nearby asymmetry energies trace near-parallel resonance
  // curves that blend for long stretches when they share a scan. Dealing the
  // delta-sorted ensemble round-robin across scans maximizes the within-scan
  // delta spacing, the same way a real campaign separates candidate defects
  // over cooldowns.
  std::vector<int> order(ensemble.defects.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return ensemble.defects[a].delta_over_h_ghz <
           ensemble.defects[b].delta_over_h_ghz;
  });
  for (int s = 0; s < n_scans; ++s) {
    TlsEnsemble subset;
    subset.spec = ensemble.spec;
    for (std::size_t r = s; r < order.size();
         r += static_cast<std::size_t>(n_scans)) {
      subset.defects.push_back(ensemble.defects[order[r]]);
      subset.regions.push_back(ensemble.regions[order[r]]);
    }
    subset.spec.count = static_cast<int>(subset.defects.size());

    SpectroscopyScan scan = simulate_scan(
        subset, dc_maps, e_rms, schedule, probe, config.interaction_time_us,
        qubit_rates, config.noise_sigma, mix64(config.seed, 0x5CA7 + s),
        config.jobs, config.gamma_mode);
    save_scan(scan, join(out, scan_file_name(s)));
  }
  return warnings;
}

std::vector<std::string> stage_fit(const RunConfig& config,
                                   const std::string& out) {
  require_artifact(out, "ensemble.json", "synthesize");
  std::vector<std::string> warnings;
  std::vector<std::string> scan_names = list_scan_files(out);

  std::vector<TraceData> traces;
  for (const std::string& name : scan_names) {
    SpectroscopyScan scan = load_scan(join(out, name));
    std::vector<TraceData> found = extract_traces(scan, config.extraction);
    for (TraceData& t : found) {
      t.source_scan = name;
      traces.push_back(std::move(t));
    }
  }
  save_traces_jsonl(traces, join(out, "traces.jsonl"));

  VoltageSchedule schedule =
      build_schedule(config.v_start_v, config.v_end_v, config.segment_size_v,
                     config.step_size_v, config.electrode_order);

  std::vector<TraceFit> fits(traces.size());
  std::vector<uint8_t> fit_ok(traces.size(), 0);
  std::vector<std::string> fit_errors(traces.size());
  parallel_for(traces.size(), config.jobs, [&](std::size_t i) {
    try {
      fits[i] = fit_hyperbola(traces[i], schedule, config.fit);
      fit_ok[i] = 1;
    } catch (const Error& e) {
      fit_errors[i] = e.what();
    }
  });

  std::vector<TraceFit> all_fits;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (fit_ok[i]) {
      all_fits.push_back(fits[i]);
    } else {
      warnings.push_back("fit failed for " + traces[i].source_scan +
                         " trace " + std::to_string(traces[i].trace_index) +
                         ": " + fit_errors[i]);
    }
  }
  save_fits_jsonl(all_fits, join(out, "fits_all.jsonl"));

  // Pool trace fragments of the same defect, then gate on fit quality.
  // Defects are split across scans disjointly, so pooling stays within one
  // scan.
  auto passes_gate = [&config](const TraceFit& f) {
    bool ok = f.converged && f.n_points >= config.fit_min_points &&
              f.residual_rms_ghz <= config.fit_max_residual_ghz &&
              f.gammas.size() >= 2;
    if (ok && config.fit_max_delta_se_rel > 0 && f.delta_over_h > 0)
      ok = f.delta_se <= config.fit_max_delta_se_rel * f.delta_over_h;
    return ok;
  };
  long rejected = 0;
  std::vector<TraceFit> deduped;
  for (const std::string& name : scan_names) {
    std::vector<TraceData> scan_traces;
    std::vector<TraceFit> scan_fits;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      if (!fit_ok[i] || traces[i].source_scan != name) continue;
      if (!fits[i].converged) {
        ++rejected;
        continue;
      }
      scan_traces.push_back(traces[i]);
      scan_fits.push_back(fits[i]);
    }
    FragmentPool pool = merge_trace_fragments(
        std::move(scan_traces), std::move(scan_fits), schedule, config.fit,
        config.fit_max_residual_ghz);
    std::vector<TraceFit> in_scan;
    for (TraceFit& f : pool.fits) {
      if (passes_gate(f))
        in_scan.push_back(std::move(f));
      else
        ++rejected;
    }
    std::vector<TraceFit> merged = dedup_fits(in_scan);
    deduped.insert(deduped.end(), merged.begin(), merged.end());
  }
  save_fits_jsonl(deduped, join(out, "fits.jsonl"));

  if (scan_names.empty())
    warnings.push_back("no scan files found: wrote empty trace and fit lists");
  if (rejected > 0)
    warnings.push_back(std::to_string(rejected) +
                       " fits rejected by the quality gate");
  return warnings;
}

std::vector<std::string> stage_localize(const RunConfig& config,
                                        const std::string& out) {
  require_artifact(out, "fits.jsonl", "fit");
  CircuitLayout layout;
  ConductorGrid grid = grid_from_run(config, out, &layout);
  FieldMap e_rms = load_field_map(join(out, "field_qubit.txt"), grid);
  std::map<Conductor, FieldMap> dc_maps = load_dc_maps(config, out, grid);
  std::vector<TraceFit> fits = load_fits_jsonl(join(out, "fits.jsonl"));

  // A response factor indistinguishable from zero (|value| < 2 se) carries no
  // ratio information, only noise; localize from the resolved electrodes.
  for (TraceFit& f : fits) {
    std::vector<GammaEstimate> kept;
    for (const GammaEstimate& g : f.gammas) {
      if (std::abs(g.value) >= 2.0 * g.se)
        kept.push_back(g);
      else
        f.missing.push_back(g.electrode);
    }
    f.gammas = std::move(kept);
  }

  std::vector<LocationRecord> records;
  bool example_saved = false;
  for (double e_min : e_min_values(config)) {
    ScalarMap mask = detectable_mask(e_rms, e_min);
    bool empty_mask = true;
    for (double v : mask.values)
      if (v > 0.0) {
        empty_mask = false;
        break;
      }
    std::vector<LocationRecord> batch(fits.size());
    parallel_for(fits.size(), config.jobs, [&](std::size_t i) {
      LocationRecord& r = batch[i];
      r.fit_index = static_cast<int>(i);
      r.e_min = e_min;
      // A threshold at or above the layout's field maximum leaves no
      // detectable cell, and a fit with fewer than two resolved electrodes
      // has no ratios: report per-fit failures instead of aborting.
      if (empty_mask || fits[i].gammas.size() < 2) {
        r.ok = false;
        return;
      }
      ResidualMap rmap = residual_map(fits[i], dc_maps, mask,
                                      config.ratio_floor);
      try {
        LocalizationResult loc = localize(rmap, layout,
                                          config.localization_band);
        r.ok = true;
        r.position = loc.position;
        r.ix = loc.ix;
        r.iy = loc.iy;
        r.sigma_min = loc.sigma_min;
        r.region = loc.region;
        r.tie = loc.tie;
        r.valid_cells = loc.valid_cells;
        r.uncertainty_cells = static_cast<long>(loc.uncertainty_cells.size());
        r.pairs_used = static_cast<long>(loc.pairs_used.size());
      } catch (const LocalizationError&) {
        r.ok = false;
      }
    });
    records.insert(records.end(), batch.begin(), batch.end());

    if (!example_saved && e_min == config.e_min_v_per_m && !fits.empty() &&
        fits[0].gammas.size() >= 2 && !empty_mask) {
      ResidualMap rmap = residual_map(fits[0], dc_maps, mask,
                                      config.ratio_floor);
      save_residual_map(rmap, join(out, "residual_fit0.txt"));
      example_saved = true;
    }
  }
  save_locations_jsonl(records, join(out, "locations.jsonl"));

  std::vector<std::string> warnings;
  if (fits.empty())
    warnings.push_back("no fits to localize: wrote an empty location list");
  long failed = 0;
  for (const LocationRecord& r : records)
    if (!r.ok) ++failed;
  if (failed > 0)
    warnings.push_back(std::to_string(failed) +
                       " (fit, threshold) pairs had no valid cells");
  return warnings;
}

std::vector<std::string> stage_analyze(const RunConfig& config,
                                       const std::string& out) {
  require_artifact(out, "locations.jsonl", "localize");
  CircuitLayout layout;
  ConductorGrid grid = grid_from_run(config, out, &layout);
  FieldMap e_rms = load_field_map(join(out, "field_qubit.txt"), grid);
  std::map<Conductor, FieldMap> dc_maps = load_dc_maps(config, out, grid);
  std::vector<TraceFit> fits = load_fits_jsonl(join(out, "fits.jsonl"));
  std::vector<LocationRecord> locations =
      load_locations_jsonl(join(out, "locations.jsonl"));
  TlsEnsemble ensemble = load_ensemble(join(out, "ensemble.json"));
  std::vector<RegionLabel> cell_regions = rasterize_regions(layout, grid);

  std::vector<std::string> warnings;
  const double headline = config.e_min_v_per_m;

  // Physical properties per defect at the headline threshold.
  std::vector<TlsRecord> tls_records;
  std::vector<const LocationRecord*> headline_locs;
  for (const LocationRecord& r : locations)
    if (r.e_min == headline && r.ok) headline_locs.push_back(&r);
  for (const LocationRecord* r : headline_locs) {
    const TraceFit& fit = fits.at(r->fit_index);
    LocalizationResult loc;
    loc.position = r->position;
    loc.ix = r->ix;
    loc.iy = r->iy;
    loc.sigma_min = r->sigma_min;
    loc.region = r->region;
    TlsRecord record;
    record.fit_index = r->fit_index;
    record.position = r->position;
    record.region = r->region;
    record.sigma_min = r->sigma_min;
    try {
      DipoleCoupling dc = estimate_dipole_and_coupling(fit, loc, dc_maps,
                                                       e_rms,
                                                       config.ratio_floor);
      record.p_parallel_ea = dc.p_parallel_ea;
      record.g_over_h_hz = dc.g_over_h_hz;
    } catch (const NumericsError& e) {
      warnings.push_back("dipole estimate failed for fit " +
                         std::to_string(r->fit_index) + ": " + e.what());
      continue;
    }
    tls_records.push_back(record);
  }

  {
    std::ofstream csv(join(out, "positions.csv"));
    if (!csv) throw IoError("cannot write positions.csv");
    csv << "fit_index,x_um,y_um,region,sigma_min,p_parallel_ea,g_over_h_hz,"
           "delta_over_h_ghz,uncertainty_cells\n";
    for (const TlsRecord& r : tls_records) {
      long unc = 0;
      for (const LocationRecord* lr : headline_locs)
        if (lr->fit_index == r.fit_index) unc = lr->uncertainty_cells;
      csv << r.fit_index << ',' << format_g(r.position.x) << ','
          << format_g(r.position.y) << ',' << region_name(r.region) << ','
          << format_g(r.sigma_min) << ',' << format_g(r.p_parallel_ea) << ','
          << format_g(r.g_over_h_hz) << ','
          << format_g(fits.at(r.fit_index).delta_over_h) << ',' << unc << '\n';
    }
  }

  // Region mix versus detection threshold, with the matching prediction for
  // a uniform density (enhancement 1 everywhere).
  std::vector<FractionSample> squid_curve;
  {
    std::ofstream csv(join(out, "fractions_vs_emin.csv"));
    if (!csv) throw IoError("cannot write fractions_vs_emin.csv");
    csv << "e_min_v_per_m,n_localized";
    for (RegionLabel r : {RegionLabel::Island, RegionLabel::GroundPlane,
                          RegionLabel::SquidLeads, RegionLabel::Electrode,
                          RegionLabel::Gap})
      csv << ",frac_" << region_name(r) << ",lo_" << region_name(r) << ",hi_"
          << region_name(r);
    csv << ",predicted_squid_uniform\n";
    for (double e_min : e_min_values(config)) {
      std::vector<RegionLabel> labels;
      for (const LocationRecord& r : locations)
        if (r.e_min == e_min && r.ok) labels.push_back(r.region);
      csv << format_g(e_min) << ',' << labels.size();
      if (labels.empty()) {
        // Thresholds past the field maximum localize nothing: zero row.
        for (int k = 0; k < 5; ++k) csv << ",0,0,0";
      } else {
        auto fractions = region_fractions_from_labels(labels);
        for (const RegionFraction& f : fractions)
          csv << ',' << format_g(f.fraction) << ',' << format_g(f.wilson_lo)
              << ',' << format_g(f.wilson_hi);
      }
      double predicted = 0.0;
      try {
        auto pred = predicted_fractions(e_rms, cell_regions, e_min);
        predicted = pred[RegionLabel::SquidLeads];
      } catch (const NumericsError&) {
        predicted = std::numeric_limits<double>::quiet_NaN();
      }
      csv << ',' << format_g(predicted) << '\n';
      if (!labels.empty()) {
        double squid = 0.0;
        for (RegionLabel r : labels)
          if (r == RegionLabel::SquidLeads) squid += 1.0;
        squid_curve.push_back({e_min, squid / labels.size()});
      }
    }
  }

  double fitted_enhancement = std::numeric_limits<double>::quiet_NaN();
  try {
    fitted_enhancement = fit_enhancement(squid_curve, e_rms, cell_regions);
  } catch (const Error& e) {
    warnings.push_back(std::string("enhancement fit skipped: ") + e.what());
  }

  {
    std::ofstream csv(join(out, "dipole_hist.csv"));
    if (!csv) throw IoError("cannot write dipole_hist.csv");
    csv << "bin_lo_ea,bin_hi_ea,count\n";
    std::vector<double> values;
    for (const TlsRecord& r : tls_records) values.push_back(r.p_parallel_ea);
    if (!values.empty()) {
      double top = *std::max_element(values.begin(), values.end()) * 1.05;
      if (top <= 0) top = 1.0;
      const int bins = 20;
      std::vector<long> counts(bins, 0);
      for (double v : values) {
        int b = std::min(bins - 1,
                         static_cast<int>(std::floor(v / top * bins)));
        counts[std::max(0, b)]++;
      }
      for (int b = 0; b < bins; ++b)
        csv << format_g(top * b / bins) << ',' << format_g(top * (b + 1) / bins)
            << ',' << counts[b] << '\n';
    }
  }

  PopulationStats stats;
  bool have_stats = !tls_records.empty();
  if (have_stats) {
    stats = population_stats(tls_records, mix64(config.seed, 0xB007));
  } else {
    warnings.push_back("no localized defects at the headline threshold: "
                       "summary statistics are empty");
  }

  json results;
  results["format"] = "tlsmap-results";
  results["schema_version"] = 1;
  results["e_min_v_per_m"] = headline;
  results["counts"] = {
      {"ensemble", ensemble.defects.size()},
      {"fits", fits.size()},
      {"localized_at_headline", headline_locs.size()},
      {"records", tls_records.size()}};
  DetectionModel model = detection_threshold(config.combined_rates(),
                                             config.kappa, config.p_ref_ea);
  results["detection_model"] = {{"kappa", config.kappa},
                                {"p_ref_ea", config.p_ref_ea},
                                {"g_min_over_h_hz", model.g_min / kPlanck},
                                {"e_min_v_per_m", model.e_min}};
  if (have_stats) {
    results["p_parallel_ea"] = {{"median", stats.p_parallel_ea.median},
                                {"ci_lo", stats.p_parallel_ea.lo},
                                {"ci_hi", stats.p_parallel_ea.hi}};
    results["g_over_h_hz"] = {{"median", stats.g_over_h_hz.median},
                              {"ci_lo", stats.g_over_h_hz.lo},
                              {"ci_hi", stats.g_over_h_hz.hi}};
    json fractions = json::array();
    for (const RegionFraction& f : stats.fractions)
      fractions.push_back({{"region", region_name(f.region)},
                           {"count", f.count},
                           {"fraction", f.fraction},
                           {"wilson_lo", f.wilson_lo},
                           {"wilson_hi", f.wilson_hi}});
    results["fractions_at_headline"] = fractions;
  } else {
    results["p_parallel_ea"] = nullptr;
    results["g_over_h_hz"] = nullptr;
    results["fractions_at_headline"] = json::array();
  }
  if (std::isfinite(fitted_enhancement))
    results["squid_enhancement_fit"] = fitted_enhancement;
  else
    results["squid_enhancement_fit"] = nullptr;
  if (config.circuit) {
    LoadedQuality q = loaded_quality(*config.circuit);
    json per = json::array();
    for (double v : q.q_l) per.push_back(v);
    results["loaded_quality"] = {{"l_q_h", q.l_q_h},
                                 {"z_q_ohm", q.z_q_ohm},
                                 {"q_l", per},
                                 {"q_l_uniform", q.q_l_uniform},
                                 {"q_tot", q.q_tot},
                                 {"t1_limit_us", q.t1_limit_us}};
  }
  results["warnings"] = warnings;

  std::ofstream res(join(out, "results.json"));
  if (!res) throw IoError("cannot write results.json");
  res << results.dump(2) << '\n';
  return warnings;
}

PipelineReport run_pipeline(const RunConfig& config, const std::string& out) {
  using clock = std::chrono::steady_clock;
  PipelineReport report;
  report.config_hash = fnv1a64_string(canonical_config_text(config));

  struct Stage {
    const char* name;
    std::vector<std::string> (*fn)(const RunConfig&, const std::string&);
  };
  const Stage stages[] = {
      {"fields", stage_fields},       {"synthesize", stage_synthesize},
      {"simulate", stage_simulate},   {"fit", stage_fit},
      {"localize", stage_localize},   {"analyze", stage_analyze},
  };
  for (const Stage& stage : stages) {
    auto t0 = clock::now();
    std::vector<std::string> warnings = stage.fn(config, out);
    double dt = std::chrono::duration<double>(clock::now() - t0).count();
    report.timings.push_back({stage.name, dt});
    for (std::string& w : warnings)
      report.warnings.push_back(std::string(stage.name) + ": " + std::move(w));
  }

  // Manifest last so it can list every artifact.
  std::map<std::string, uint64_t> hashes;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    std::string rel =
        fs::relative(entry.path(), out).generic_string();
    if (rel == "manifest.json") continue;
    hashes[rel] = fnv1a64_file(entry.path().string());
  }

  char hex[24];
  uint64_t h = kFnvOffset;
  json files = json::object();
  for (const auto& [rel, file_hash] : hashes) {
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(file_hash));
    files[rel] = hex;
    std::string line = rel + "=" + hex + "\n";
    h = fnv1a64(line.data(), line.size(), h);
  }
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(report.config_hash));
  std::string tail = std::string("config=") + hex + "\n" +
                     "seed=" + std::to_string(config.seed) + "\n";
  h = fnv1a64(tail.data(), tail.size(), h);
  report.manifest_hash = h;

  json manifest;
  manifest["format"] = "tlsmap-manifest";
  manifest["schema_version"] = 1;
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(report.config_hash));
  manifest["config_hash"] = hex;
  manifest["seed"] = config.seed;
  manifest["files"] = files;
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(report.manifest_hash));
  manifest["manifest_hash"] = hex;
  json timings = json::array();
  for (const StageTiming& t : report.timings)
    timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  manifest["timings"] = timings;
  json warn = json::array();
  for (const std::string& w : report.warnings) warn.push_back(w);
  manifest["warnings"] = warn;

  std::ofstream res(join(out, "manifest.json"));
  if (!res) throw IoError("cannot write manifest.json");
  res << manifest.dump(2) << '\n';
  return report;
}

uint64_t manifest_hash_of_directory(const RunConfig& config,
                                    const std::string& out) {
  std::map<std::string, uint64_t> hashes;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    std::string rel = fs::relative(entry.path(), out).generic_string();
    if (rel == "manifest.json") continue;
    hashes[rel] = fnv1a64_file(entry.path().string());
  }
  uint64_t h = kFnvOffset;
  char hex[24];
  for (const auto& [rel, file_hash] : hashes) {
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(file_hash));
    std::string line = rel + "=" + hex + "\n";
    h = fnv1a64(line.data(), line.size(), h);
  }
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64_string(canonical_config_text(config))));
  std::string tail = std::string("config=") + hex + "\n" +
                     "seed=" + std::to_string(config.seed) + "\n";
  h = fnv1a64(tail.data(), tail.size(), h);
  return h;
}

}  // namespace tlsmap
