#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tlsmap/ensemble.hpp"
#include "tlsmap/fields.hpp"
#include "tlsmap/schedule.hpp"
#include "tlsmap/tls_physics.hpp"

namespace tlsmap {

// One swap-spectroscopy data set: qubit |1> population after the interaction
// window, per (schedule step, probe frequency).
struct SpectroscopyScan {
  VoltageSchedule schedule;
  std::vector<double> probe_frequencies_ghz;  // strictly increasing
  double interaction_time_us = 0.0;
  double noise_sigma = 0.0;
  uint64_t noise_seed = 0;
  double gamma1_q = 0.0;  // background qubit relaxation, 1/s
  std::vector<double> population;  // steps x freqs, row-major

  long steps() const { return schedule.total_steps(); }
  std::size_t freq_count() const { return probe_frequencies_ghz.size(); }
  double at(long step, std::size_t f) const {
    return population[static_cast<std::size_t>(step) * freq_count() + f];
  }
};

// Evenly spaced probe grid over the half-open window [lo, hi): points
// lo + i*step for i < round((hi - lo)/step).
std::vector<double> frequency_grid(double lo_ghz, double hi_ghz,
                                   double step_ghz);

// Forward model: per (step, frequency), every defect contributes a
// Lorentzian excess relaxation at its voltage-tuned resonance; the
// population is exp(-Gamma_total * t) plus Gaussian noise, clamped to [0,1].
// Noise is drawn per pixel from (seed, step, frequency) counters, so results
// are identical for any `jobs`. gamma_mode selects how dipoles project onto
// the fields: Vector uses the dipole orientation, Scalar uses magnitudes
// (an exactly invertible synthetic ground truth).
SpectroscopyScan simulate_scan(const TlsEnsemble& ensemble,
                               const std::map<Conductor, FieldMap>& dc_maps,
                               const FieldMap& e_rms,
                               const VoltageSchedule& schedule,
                               const std::vector<double>& probe_ghz,
                               double interaction_time_us,
                               const RateSet& qubit_rates, double noise_sigma,
                               uint64_t seed, int jobs = 1,
                               GammaMode gamma_mode = GammaMode::Vector);

void save_scan(const SpectroscopyScan& scan, const std::string& path);
SpectroscopyScan load_scan(const std::string& path);

}  // namespace tlsmap
