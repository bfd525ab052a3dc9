#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tlsmap/fields.hpp"
#include "tlsmap/geometry.hpp"
#include "tlsmap/tls_physics.hpp"

namespace tlsmap {

enum class OrientationMode {
  QubitField,  // dipole parallel to the local RMS field
  Uniform,     // random in-plane angle
};

struct EnsembleSpec {
  int count = 0;
  // Relative density per region; regions absent from the map default to 1.
  std::map<RegionLabel, double> enhancement;
  // Cell weights additionally carry |E_rms|^2, modeling that the observed
  // TLS set is biased toward strongly coupled locations.
  bool weight_by_field_energy = true;

  double dipole_moment_ea = 1.0;   // mean dipole magnitude
  double dipole_sigma_ea = 0.0;    // 0 = fixed magnitude
  OrientationMode orientation = OrientationMode::QubitField;

  RateSet rates;

  double window_lo_ghz = 0.0;  // spectroscopy window for delta/h and the
  double window_hi_ghz = 0.0;  // zero-voltage resonance

  uint64_t seed = 0;
};

struct TlsEnsemble {
  std::vector<TlsDefect> defects;
  std::vector<RegionLabel> regions;  // true region per defect
  EnsembleSpec spec;                 // regenerates the ensemble bit-exactly
};

// Draws defect positions on cell centers of mask cells (mask value 1), with
// per-cell weight enhancement(region) * |E_rms|^2 (the field factor is
// optional). Tunneling energies are uniform over the window; the asymmetry
// is set so the zero-voltage resonance is uniform between delta/h and the
// window top, with random sign.
TlsEnsemble sample_ensemble(const CircuitLayout& layout, const ScalarMap& mask,
                            const FieldMap& e_rms, const EnsembleSpec& spec);

// JSON serialization of the full ensemble, including the spec that drew it.
void save_ensemble(const TlsEnsemble& ensemble, const std::string& path);
TlsEnsemble load_ensemble(const std::string& path);

}  // namespace tlsmap
