#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "tlsmap/fields.hpp"
#include "tlsmap/geometry.hpp"
#include "tlsmap/localization.hpp"
#include "tlsmap/trace_fit.hpp"

namespace tlsmap {

// Lumped circuit parameters of the transmon and its gate couplings.
struct CircuitParams {
  double c_q_ff = 0.0;            // island-to-ground capacitance
  std::vector<double> c_qi_ff;    // island-to-electrode capacitances
  double i_c_na = 0.0;            // junction critical current (per junction)
  double f_q_ghz = 0.0;           // qubit frequency
  double re_z_eff_ohm = 0.0;      // effective line impedance seen by a gate
  double e_c_over_h_ghz = 0.0;    // charging energy (documentation)
  double e_j_over_h_ghz = 0.0;    // Josephson energy (documentation)

  double c_tot_ff() const;
  void validate() const;
};

struct LoadedQuality {
  double l_q_h = 0.0;            // SQUID inductance, henries
  double z_q_ohm = 0.0;          // qubit mode impedance
  std::vector<double> q_l;       // per-electrode loaded quality factors
  double q_l_uniform = 0.0;      // n * q_tot: the common per-electrode value
                                 // that reproduces the same total loss
  double q_tot = 0.0;
  double t1_limit_us = 0.0;
};

// Appendix-C style capacitive-loss estimate: L_q = h/(8 pi e I_c) for the
// two-junction SQUID, Z_q = sqrt(L_q/C_tot), Q_l,i = (C_tot/C_qi)^2 *
// Z_q/Re(Z_eff), Q_tot = (sum 1/Q_l,i)^-1, T1 = Q_tot/(2 pi f_q).
LoadedQuality loaded_quality(const CircuitParams& params);

struct DipoleCoupling {
  double p_parallel_ea = 0.0;  // projected dipole moment
  double g_over_h_hz = 0.0;    // resonant coupling at the zero-voltage point
  int electrodes_used = 0;
};

// p_parallel = median over usable electrodes of |gamma_i| h / (2 |E_i|) at
// the localized cell; g/h = (delta / f0) * p * |E_rms| / h with f0 the fit's
// zero-voltage resonance. Electrodes whose field at the position is below
// ratio_floor * map max are unusable.
DipoleCoupling estimate_dipole_and_coupling(
    const TraceFit& fit, const LocalizationResult& loc,
    const std::map<Conductor, FieldMap>& dc_maps, const FieldMap& e_rms,
    double ratio_floor = 1e-4);

struct RegionFraction {
  RegionLabel region = RegionLabel::Gap;
  long count = 0;
  double fraction = 0.0;
  double wilson_lo = 0.0;  // 95% Wilson score interval
  double wilson_hi = 0.0;
};

// Counts per region over all five labels (zero counts included).
std::vector<RegionFraction> region_fractions(
    const std::vector<LocalizationResult>& results);
std::vector<RegionFraction> region_fractions_from_labels(
    const std::vector<RegionLabel>& labels);

// fraction_r = enhancement_r * sum_{cells in r, |E|>e_min} |E|^2, normalized
// over regions. cell_regions must label every grid cell (row-major).
std::map<RegionLabel, double> predicted_fractions(
    const FieldMap& e_rms, const std::vector<RegionLabel>& cell_regions,
    double e_min, const std::map<RegionLabel, double>& enhancement = {});

struct FractionSample {
  double e_min = 0.0;
  double squid_fraction = 0.0;
};

// Least-squares fit of the SQUID-region density enhancement against an
// observed fraction-vs-threshold curve; golden-section search on [0.1, 10]
// to 1e-3. Samples whose threshold empties the detectable set are ignored.
double fit_enhancement(const std::vector<FractionSample>& observed,
                       const FieldMap& e_rms,
                       const std::vector<RegionLabel>& cell_regions);

struct MedianCi {
  double median = 0.0;
  double lo = 0.0;  // 95% bootstrap percentile interval
  double hi = 0.0;
};

double median(std::vector<double> values);
MedianCi bootstrap_median(const std::vector<double>& values, int resamples,
                          uint64_t seed);

struct TlsRecord {
  int fit_index = -1;
  Point position;
  RegionLabel region = RegionLabel::Gap;
  double p_parallel_ea = 0.0;
  double g_over_h_hz = 0.0;
  double sigma_min = 0.0;
};

struct PopulationStats {
  std::vector<TlsRecord> records;
  std::vector<RegionFraction> fractions;
  MedianCi p_parallel_ea;
  MedianCi g_over_h_hz;
};

PopulationStats population_stats(const std::vector<TlsRecord>& records,
                                 uint64_t bootstrap_seed);

}  // namespace tlsmap
