#include "tlsmap/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "tlsmap/constants.hpp"
#include "tlsmap/errors.hpp"
#include "tlsmap/rng.hpp"

namespace tlsmap {

double CircuitParams::c_tot_ff() const {
  double total = c_q_ff;
  for (double c : c_qi_ff) total += c;
  return total;
}

void CircuitParams::validate() const {
  if (!(c_q_ff > 0)) throw ConfigError("CircuitParams: c_q must be positive");
  if (c_qi_ff.empty())
    throw ConfigError("CircuitParams: need at least one gate capacitance");
  for (double c : c_qi_ff)
    if (!(c > 0))
      throw ConfigError("CircuitParams: gate capacitances must be positive");
  if (!(i_c_na > 0))
    throw ConfigError("CircuitParams: critical current must be positive");
  if (!(f_q_ghz > 0))
    throw ConfigError("CircuitParams: qubit frequency must be positive");
  if (!(re_z_eff_ohm > 0))
    throw ConfigError("CircuitParams: line impedance must be positive");
}

LoadedQuality loaded_quality(const CircuitParams& params) {
  params.validate();
  LoadedQuality out;
  // Josephson inductance h/(4 pi e I_c) per junction; the SQUID's two
  // parallel junctions halve it.
  double i_c = params.i_c_na * kNanoampere;
  out.l_q_h = 0.5 * kPlanck / (4.0 * kPi * kElementaryCharge * i_c);
  double c_tot = params.c_tot_ff() * kFemtofarad;
  out.z_q_ohm = std::sqrt(out.l_q_h / c_tot);

  double inv_sum = 0.0;
  for (double c_qi_ff : params.c_qi_ff) {
    double ratio = params.c_tot_ff() / c_qi_ff;
    double q = ratio * ratio * out.z_q_ohm / params.re_z_eff_ohm;
    out.q_l.push_back(q);
    inv_sum += 1.0 / q;
  }
  out.q_tot = 1.0 / inv_sum;
  out.q_l_uniform = params.c_qi_ff.size() * out.q_tot;
  out.t1_limit_us =
      out.q_tot / (kTwoPi * params.f_q_ghz * kGigahertz) * 1e6;
  return out;
}

DipoleCoupling estimate_dipole_and_coupling(
    const TraceFit& fit, const LocalizationResult& loc,
    const std::map<Conductor, FieldMap>& dc_maps, const FieldMap& e_rms,
    double ratio_floor) {
  std::vector<double> estimates;
  for (const GammaEstimate& g : fit.gammas) {
    auto it = dc_maps.find(g.electrode);
    if (it == dc_maps.end())
      throw ConfigError("estimate_dipole_and_coupling: missing field map for '" +
                        conductor_name(g.electrode) + "'");
    const FieldMap& map = it->second;
    double mag = map.magnitude_at(loc.ix, loc.iy);
    double max_mag = 0.0;
    for (std::size_t k = 0; k < map.ex.size(); ++k)
      max_mag = std::max(max_mag, std::hypot(map.ex[k], map.ey[k]));
    if (mag < ratio_floor * max_mag || mag == 0.0) continue;
    // gamma/h [GHz/V] = 2 p E / h with E in (V/m)/V.
    double p_cm = std::abs(g.value) * kGigahertz * kPlanck / (2.0 * mag);
    estimates.push_back(p_cm / kCoulombMeterPerEAngstrom);
  }
  if (estimates.empty())
    throw NumericsError(
        "estimate_dipole_and_coupling: no electrode field is usable at the "
        "localized position");

  DipoleCoupling result;
  result.electrodes_used = static_cast<int>(estimates.size());
  result.p_parallel_ea = median(std::move(estimates));

  double f0 = fit.zero_voltage_frequency();
  double e_mag = e_rms.magnitude_at(loc.ix, loc.iy);
  double p_cm = result.p_parallel_ea * kCoulombMeterPerEAngstrom;
  double prefactor = f0 > 0 ? fit.delta_over_h / f0 : 1.0;
  result.g_over_h_hz = prefactor * p_cm * e_mag / kPlanck;
  return result;
}

namespace {

// 95% Wilson score interval.
std::pair<double, double> wilson_interval(long count, long total) {
  if (total == 0) return {0.0, 0.0};
  const double z = 1.959963984540054;
  double n = static_cast<double>(total);
  double p = static_cast<double>(count) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

constexpr RegionLabel kAllRegions[] = {RegionLabel::Island,
                                       RegionLabel::GroundPlane,
                                       RegionLabel::SquidLeads,
                                       RegionLabel::Electrode, RegionLabel::Gap};

}  // namespace

std::vector<RegionFraction> region_fractions_from_labels(
    const std::vector<RegionLabel>& labels) {
  if (labels.empty())
    throw ConfigError("region_fractions: empty result list");
  std::map<RegionLabel, long> counts;
  for (RegionLabel r : labels) counts[r]++;
  std::vector<RegionFraction> out;
  long total = static_cast<long>(labels.size());
  for (RegionLabel r : kAllRegions) {
    RegionFraction f;
    f.region = r;
    f.count = counts.count(r) ? counts[r] : 0;
    f.fraction = static_cast<double>(f.count) / total;
    auto [lo, hi] = wilson_interval(f.count, total);
    f.wilson_lo = lo;
    f.wilson_hi = hi;
    out.push_back(f);
  }
  return out;
}

std::vector<RegionFraction> region_fractions(
    const std::vector<LocalizationResult>& results) {
  std::vector<RegionLabel> labels;
  labels.reserve(results.size());
  for (const LocalizationResult& r : results) labels.push_back(r.region);
  return region_fractions_from_labels(labels);
}

std::map<RegionLabel, double> predicted_fractions(
    const FieldMap& e_rms, const std::vector<RegionLabel>& cell_regions,
    double e_min, const std::map<RegionLabel, double>& enhancement) {
  if (cell_regions.size() != e_rms.ex.size())
    throw ConfigError("predicted_fractions: region labels do not cover the grid");
  if (e_min < 0)
    throw ConfigError("predicted_fractions: e_min must be >= 0");

  auto factor_of = [&enhancement](RegionLabel r) {
    auto it = enhancement.find(r);
    return it != enhancement.end() ? it->second : 1.0;
  };

  std::map<RegionLabel, double> weights;
  double total = 0.0;
  for (std::size_t k = 0; k < cell_regions.size(); ++k) {
    if (e_rms.conductor_mask[k]) continue;
    double e2 = e_rms.ex[k] * e_rms.ex[k] + e_rms.ey[k] * e_rms.ey[k];
    if (!(std::sqrt(e2) > e_min)) continue;
    double w = factor_of(cell_regions[k]) * e2;
    weights[cell_regions[k]] += w;
    total += w;
  }
  if (total <= 0.0)
    throw NumericsError("predicted_fractions: detectable set empty at e_min=" +
                        std::to_string(e_min));
  for (auto& [region, w] : weights) w /= total;
  return weights;
}

double fit_enhancement(const std::vector<FractionSample>& observed,
                       const FieldMap& e_rms,
                       const std::vector<RegionLabel>& cell_regions) {
  if (observed.size() < 3)
    throw ConfigError("fit_enhancement: need at least 3 threshold samples");

  auto predicted_squid = [&](double factor, double e_min, bool& ok) {
    std::map<RegionLabel, double> enh{{RegionLabel::SquidLeads, factor}};
    try {
      auto fractions = predicted_fractions(e_rms, cell_regions, e_min, enh);
      ok = true;
      auto it = fractions.find(RegionLabel::SquidLeads);
      return it != fractions.end() ? it->second : 0.0;
    } catch (const NumericsError&) {
      ok = false;
      return 0.0;
    }
  };

  auto loss = [&](double factor) {
    double sum = 0.0;
    int used = 0;
    for (const FractionSample& s : observed) {
      bool ok = false;
      double pred = predicted_squid(factor, s.e_min, ok);
      if (!ok) continue;
      double d = pred - s.squid_fraction;
      sum += d * d;
      ++used;
    }
    if (used == 0)
      throw NumericsError("fit_enhancement: no threshold sample has a "
                          "non-empty detectable set");
    return sum;
  };

  // Degenerate when the prediction does not react to the factor at all.
  if (std::abs(loss(0.5) - loss(5.0)) < 1e-15 &&
      std::abs(loss(1.0) - loss(2.0)) < 1e-15)
    throw NumericsError("fit_enhancement: predictions are constant in the "
                        "enhancement factor");

  // Golden-section search on [0.1, 10].
  const double phi = 0.6180339887498949;
  double a = 0.1, b = 10.0;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = loss(x1), f2 = loss(x2);
  while (b - a > 1e-3) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = loss(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = loss(x2);
    }
  }
  return 0.5 * (a + b);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median: empty input");
  std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

MedianCi bootstrap_median(const std::vector<double>& values, int resamples,
                          uint64_t seed) {
  MedianCi ci;
  ci.median = median(values);
  if (values.size() < 2 || resamples < 10) {
    ci.lo = ci.hi = ci.median;
    return ci;
  }
  Rng rng(seed);
  std::vector<double> medians(resamples);
  std::vector<double> sample(values.size());
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < values.size(); ++i)
      sample[i] = values[rng.next_below(values.size())];
    medians[r] = median(sample);
  }
  std::sort(medians.begin(), medians.end());
  auto pick = [&](double q) {
    double idx = q * (resamples - 1);
    return medians[static_cast<std::size_t>(std::lround(idx))];
  };
  ci.lo = pick(0.025);
  ci.hi = pick(0.975);
  return ci;
}

PopulationStats population_stats(const std::vector<TlsRecord>& records,
                                 uint64_t bootstrap_seed) {
  if (records.empty())
    throw ConfigError("population_stats: empty record list");
  PopulationStats stats;
  stats.records = records;

  std::vector<RegionLabel> labels;
  std::vector<double> dipoles, couplings;
  for (const TlsRecord& r : records) {
    labels.push_back(r.region);
    dipoles.push_back(r.p_parallel_ea);
    couplings.push_back(std::abs(r.g_over_h_hz));
  }
  stats.fractions = region_fractions_from_labels(labels);
  stats.p_parallel_ea = bootstrap_median(dipoles, 1000, bootstrap_seed);
  stats.g_over_h_hz = bootstrap_median(couplings, 1000, mix64(bootstrap_seed, 1));
  return stats;
}

}  // namespace tlsmap
