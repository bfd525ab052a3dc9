#pragma once

#include "tlsmap/fields.hpp"
#include "tlsmap/geometry.hpp"

namespace tlsmap {

// Decoherence rates of the TLS and the qubit, all in 1/s.
struct RateSet {
  double gamma1_tls = 0.0;
  double gamma2_tls = 0.0;
  double gamma1_q = 0.0;
  double gamma2_q = 0.0;

  // Combined linewidth entering the Lorentzian response.
  double total() const {
    return gamma1_tls / 2.0 + gamma2_tls + gamma1_q / 2.0 + gamma2_q;
  }

  // All rates non-negative and gamma2 >= gamma1/2 for each system.
  void validate() const;

  // Lifetimes in us; gamma2_q defaults to the T1-limited value gamma1_q/2
  // when t2_q_us <= 0.
  static RateSet from_lifetimes(double t1_tls_us, double t2_tls_us,
                                double t1_q_us, double t2_q_us = 0.0);
};

struct TlsDefect {
  Point position;               // um
  double dipole_moment = 1.0;   // e*Angstrom, > 0
  Vec2 orientation{1.0, 0.0};   // unit vector, in-plane
  double delta_over_h = 0.0;    // tunneling energy / h, GHz, > 0
  double epsilon0_over_h = 0.0; // zero-voltage asymmetry / h, GHz, signed
  RateSet rates;

  // Resonance with no applied voltage: sqrt((delta/h)^2 + (eps0/h)^2).
  double zero_voltage_frequency() const;
  void validate() const;
};

struct DetectionModel {
  double kappa = 0.0;   // smallest resolvable relative T1 reduction
  double p_ref = 0.0;   // e*Angstrom
  double g_min = 0.0;   // J
  double e_min = 0.0;   // V/m
};

enum class GammaMode { Vector, Scalar };

// Resonance of the two-level system in GHz:
// f = sqrt((delta/h)^2 + (eps_total/h)^2).
double tls_frequency(double delta_over_h_ghz, double eps_total_over_h_ghz);

// Asymmetry-energy tuning strength gamma/h in GHz per applied volt.
// Vector mode projects the unit-voltage field onto the dipole; scalar mode
// uses the field magnitude (always >= 0).
double gamma_from_field(const TlsDefect& tls, const FieldMap& field,
                        GammaMode mode = GammaMode::Vector);

// Resonant qubit coupling g/h in GHz: (delta/h / f_tls) * (p.E_rms)/h.
// Signed when the dipole opposes the local RMS field; callers square it or
// take the magnitude.
double coupling_strength(const TlsDefect& tls, const FieldMap& e_rms,
                         double f_tls_ghz);

// g_min = hbar * sqrt(kappa * gamma1_q * Gamma / 2); E_min = g_min / p_ref.
DetectionModel detection_threshold(const RateSet& rates, double kappa,
                                   double p_ref_ea);

// Lorentzian qubit relaxation near a TLS resonance, detuning in Hz:
// Gamma1 = 2 (g/h)^2 Gamma / ((Gamma/2pi)^2 + delta^2) + gamma1_q.
double relaxation_rate(double g_over_h_hz, const RateSet& rates,
                       double detuning_hz);

// Excess over the qubit background only (the TLS-induced part).
double excess_relaxation_rate(double g_over_h_hz, const RateSet& rates,
                              double detuning_hz);

}  // namespace tlsmap
