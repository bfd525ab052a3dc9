#include "tlsmap/tls_physics.hpp"

#include <cmath>
#include <sstream>

#include "tlsmap/constants.hpp"
#include "tlsmap/errors.hpp"

namespace tlsmap {
namespace {

// Field maps are undefined on conductors; reject sampling positions there.
void require_vacuum_position(const FieldMap& map, Point p,
                             const char* caller) {
  const GridMeta& m = map.meta;
  if (p.x < m.x_min || p.x > m.x_min + m.nx * m.spacing || p.y < m.y_min ||
      p.y > m.y_min + m.ny * m.spacing) {
    std::ostringstream os;
    os << caller << ": position (" << p.x << ", " << p.y
       << ") outside the field grid";
    throw ConfigError(os.str());
  }
  int ix = std::min(static_cast<int>((p.x - m.x_min) / m.spacing), m.nx - 1);
  int iy = std::min(static_cast<int>((p.y - m.y_min) / m.spacing), m.ny - 1);
  if (map.conductor_mask[m.index(ix, iy)]) {
    std::ostringstream os;
    os << caller << ": position (" << p.x << ", " << p.y
       << ") lies on a conductor cell";
    throw ConfigError(os.str());
  }
}

}  // namespace

void RateSet::validate() const {
  if (gamma1_tls < 0 || gamma2_tls < 0 || gamma1_q < 0 || gamma2_q < 0)
    throw ConfigError("RateSet: rates must be non-negative");
  // Tiny slack absorbs roundoff when gamma2 is derived as gamma1/2.
  if (gamma2_tls < gamma1_tls / 2.0 * (1.0 - 1e-12))
    throw ConfigError("RateSet: gamma2_tls must be >= gamma1_tls/2");
  if (gamma2_q < gamma1_q / 2.0 * (1.0 - 1e-12))
    throw ConfigError("RateSet: gamma2_q must be >= gamma1_q/2");
}

RateSet RateSet::from_lifetimes(double t1_tls_us, double t2_tls_us,
                                double t1_q_us, double t2_q_us) {
  if (!(t1_tls_us > 0) || !(t2_tls_us > 0) || !(t1_q_us > 0))
    throw ConfigError("RateSet: lifetimes must be positive");
  RateSet r;
  r.gamma1_tls = 1.0 / (t1_tls_us * 1e-6);
  r.gamma2_tls = 1.0 / (t2_tls_us * 1e-6);
  r.gamma1_q = 1.0 / (t1_q_us * 1e-6);
  r.gamma2_q = t2_q_us > 0 ? 1.0 / (t2_q_us * 1e-6) : r.gamma1_q / 2.0;
  r.validate();
  return r;
}

double TlsDefect::zero_voltage_frequency() const {
  return tls_frequency(delta_over_h, epsilon0_over_h);
}

void TlsDefect::validate() const {
  if (!(dipole_moment > 0))
    throw ConfigError("TlsDefect: dipole moment must be positive");
  if (!(delta_over_h > 0))
    throw ConfigError("TlsDefect: tunneling energy must be positive");
  double norm = std::hypot(orientation.x, orientation.y);
  if (std::abs(norm - 1.0) > 1e-12)
    throw ConfigError("TlsDefect: orientation must be a unit vector");
  rates.validate();
}

double tls_frequency(double delta_over_h_ghz, double eps_total_over_h_ghz) {
  if (!(delta_over_h_ghz > 0))
    throw ConfigError("tls_frequency: tunneling energy must be positive");
  return std::hypot(delta_over_h_ghz, eps_total_over_h_ghz);
}

double gamma_from_field(const TlsDefect& tls, const FieldMap& field,
                        GammaMode mode) {
  require_vacuum_position(field, tls.position, "gamma_from_field");
  Vec2 e = sample_field(field, tls.position);
  double p_cm = tls.dipole_moment * kCoulombMeterPerEAngstrom;
  double projected = mode == GammaMode::Vector
                         ? e.x * tls.orientation.x + e.y * tls.orientation.y
                         : std::hypot(e.x, e.y);
  return 2.0 * p_cm * projected / kPlanck / kGigahertz;
}

double coupling_strength(const TlsDefect& tls, const FieldMap& e_rms,
                         double f_tls_ghz) {
  require_vacuum_position(e_rms, tls.position, "coupling_strength");
  if (f_tls_ghz < tls.delta_over_h * (1.0 - 1e-12))
    throw ConfigError("coupling_strength: resonance below tunneling energy");
  Vec2 e = sample_field(e_rms, tls.position);
  double p_cm = tls.dipole_moment * kCoulombMeterPerEAngstrom;
  double pe = p_cm * (e.x * tls.orientation.x + e.y * tls.orientation.y);
  double prefactor = tls.delta_over_h / std::max(f_tls_ghz, tls.delta_over_h);
  return prefactor * pe / kPlanck / kGigahertz;
}

DetectionModel detection_threshold(const RateSet& rates, double kappa,
                                   double p_ref_ea) {
  rates.validate();
  if (!(kappa > 0) || !(kappa < 1))
    throw ConfigError("detection_threshold: kappa must lie in (0, 1)");
  if (!(p_ref_ea > 0))
    throw ConfigError("detection_threshold: reference dipole must be positive");
  DetectionModel model;
  model.kappa = kappa;
  model.p_ref = p_ref_ea;
  model.g_min = kHbar * std::sqrt(kappa * rates.gamma1_q * rates.total() / 2.0);
  model.e_min = model.g_min / (p_ref_ea * kCoulombMeterPerEAngstrom);
  return model;
}

double excess_relaxation_rate(double g_over_h_hz, const RateSet& rates,
                              double detuning_hz) {
  double gamma = rates.total();
  double hw = gamma / kTwoPi;  // half-width in ordinary frequency
  return 2.0 * g_over_h_hz * g_over_h_hz * gamma /
         (hw * hw + detuning_hz * detuning_hz);
}

double relaxation_rate(double g_over_h_hz, const RateSet& rates,
                       double detuning_hz) {
  rates.validate();
  return excess_relaxation_rate(g_over_h_hz, rates, detuning_hz) +
         rates.gamma1_q;
}

}  // namespace tlsmap
