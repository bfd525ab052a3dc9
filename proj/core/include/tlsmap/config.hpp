#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tlsmap/analysis.hpp"
#include "tlsmap/ensemble.hpp"
#include "tlsmap/fields.hpp"
#include "tlsmap/geometry.hpp"
#include "tlsmap/trace_fit.hpp"

namespace tlsmap {

// Full description of a reproducible run. Key names in the file carry
// explicit units (spacing_um, e_min_v_per_m, ...).
struct RunConfig {
  std::string layout_path;
  std::string base_dir;  // directory of the config file; not serialized
  double spacing_um = 0.5;
  SolverOptions solver;

  double qubit_capacitance_ff = 84.0;
  double qubit_frequency_ghz = 5.1;
  double qubit_t1_us = 7.0;
  double qubit_t2_us = 0.0;  // 0 = T1-limited (gamma2 = gamma1/2)

  double kappa = 0.05;
  double p_ref_ea = 1.0;
  double e_min_v_per_m = 0.75;
  std::vector<double> e_min_grid_v_per_m = {0.25, 0.5, 0.75, 1.0, 1.5,
                                            2.0,  3.0, 4.0,  6.0};

  double tls_t1_us = 2.0;
  double tls_t2_us = 2.0;
  double dipole_ea = 1.0;
  double dipole_sigma_ea = 0.0;
  OrientationMode orientation = OrientationMode::QubitField;
  GammaMode gamma_mode = GammaMode::Vector;

  int tls_count = 55;
  uint64_t seed = 1;
  std::map<RegionLabel, double> enhancement;
  bool weight_by_field_energy = true;

  double v_start_v = -20.0;
  double v_end_v = 20.0;
  double segment_size_v = 1.0;
  double step_size_v = 0.05;
  std::vector<Conductor> electrode_order = {
      Conductor::ElectrodeAlpha, Conductor::ElectrodeBeta,
      Conductor::ElectrodeGamma, Conductor::ElectrodeDelta};

  double window_lo_ghz = 5.05;
  double window_hi_ghz = 5.20;
  double freq_step_ghz = 0.000375;
  double interaction_time_us = 2.5;
  double noise_sigma = 0.02;
  int tls_per_scan = 5;

  ExtractionOptions extraction;
  FitOptions fit;
  // Quality gate before a fit enters localization and statistics.
  int fit_min_points = 30;
  double fit_max_residual_ghz = 0.003;
  double fit_max_delta_se_rel = 0.5;

  double ratio_floor = 1e-4;
  double localization_band = 0.1;

  std::optional<CircuitParams> circuit;

  struct CutLine {
    std::string name;
    Point a, b;
    int samples = 101;
  };
  std::vector<CutLine> cut_lines;

  std::string output_dir = "out";
  int jobs = 1;

  RateSet qubit_rates() const;
  RateSet combined_rates() const;  // TLS + qubit
  EnsembleSpec ensemble_spec() const;
  std::string resolved_layout_path() const;
};

RunConfig load_config(const std::string& path);
RunConfig config_from_json_text(const std::string& text,
                                const std::string& base_dir = ".");
void save_config(const RunConfig& config, const std::string& path);
std::string config_to_json_text(const RunConfig& config);

// Serialization without execution details (jobs, output directory); two
// runs that must produce identical results hash identically here.
std::string canonical_config_text(const RunConfig& config);

// Structural checks plus existence of referenced files.
void validate_config(const RunConfig& config);

}  // namespace tlsmap
