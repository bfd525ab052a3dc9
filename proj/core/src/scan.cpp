#include "tlsmap/scan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tlsmap/constants.hpp"
#include "tlsmap/errors.hpp"
#include "tlsmap/parallel.hpp"
#include "tlsmap/rng.hpp"

namespace tlsmap {
namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_conductors(const std::vector<Conductor>& order) {
  std::string out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += ',';
    out += conductor_name(order[i]);
  }
  return out;
}

std::vector<Conductor> split_conductors(const std::string& csv) {
  std::vector<Conductor> out;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) out.push_back(conductor_from_name(token));
  return out;
}

std::string scan_header_value(std::istream& in, const std::string& path,
                              const std::string& key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key)
    throw IoError("scan file " + path + ": expected header line '" + key +
                  " <value>'");
  return v;
}

}  // namespace

std::vector<double> frequency_grid(double lo_ghz, double hi_ghz,
                                   double step_ghz) {
  if (!(step_ghz > 0) || !(hi_ghz > lo_ghz))
    throw ConfigError("frequency_grid: need hi > lo and positive step");
  // Half-open grid [lo, hi): count = span/step rounded to nearest.
  long count = static_cast<long>(std::floor((hi_ghz - lo_ghz) / step_ghz + 0.5));
  std::vector<double> freqs;
  freqs.reserve(count);
  for (long i = 0; i < count; ++i) freqs.push_back(lo_ghz + i * step_ghz);
  return freqs;
}

SpectroscopyScan simulate_scan(const TlsEnsemble& ensemble,
                               const std::map<Conductor, FieldMap>& dc_maps,
                               const FieldMap& e_rms,
                               const VoltageSchedule& schedule,
                               const std::vector<double>& probe_ghz,
                               double interaction_time_us,
                               const RateSet& qubit_rates, double noise_sigma,
                               uint64_t seed, int jobs, GammaMode gamma_mode) {
  if (probe_ghz.size() < 2)
    throw ConfigError("simulate_scan: need at least two probe frequencies");
  for (std::size_t i = 1; i < probe_ghz.size(); ++i)
    if (!(probe_ghz[i] > probe_ghz[i - 1]))
      throw ConfigError("simulate_scan: probe frequencies must be strictly increasing");
  if (!(interaction_time_us > 0))
    throw ConfigError("simulate_scan: interaction time must be positive");
  if (noise_sigma < 0)
    throw ConfigError("simulate_scan: noise sigma must be >= 0");
  qubit_rates.validate();
  for (Conductor e : schedule.electrode_order) {
    auto it = dc_maps.find(e);
    if (it == dc_maps.end())
      throw ConfigError("simulate_scan: missing DC field map for '" +
                        conductor_name(e) + "'");
    if (!(it->second.meta == e_rms.meta))
      throw ConfigError("simulate_scan: DC and RMS field maps use different grids");
  }

  const std::size_t n_elec = schedule.electrode_order.size();
  const std::size_t n_tls = ensemble.defects.size();

  // Per-defect constants: electrode tuning strengths (GHz/V) and the dipole
  // projection onto the RMS field expressed as a frequency (GHz).
  std::vector<double> gammas(n_tls * n_elec);
  std::vector<double> pe_ghz(n_tls);
  std::vector<double> line_width(n_tls);
  for (std::size_t t = 0; t < n_tls; ++t) {
    const TlsDefect& tls = ensemble.defects[t];
    for (std::size_t e = 0; e < n_elec; ++e) {
      const FieldMap& map = dc_maps.at(schedule.electrode_order[e]);
      gammas[t * n_elec + e] = gamma_from_field(tls, map, gamma_mode);
    }
    Vec2 f = sample_field(e_rms, tls.position);
    double p_cm = tls.dipole_moment * kCoulombMeterPerEAngstrom;
    double projected = gamma_mode == GammaMode::Vector
                           ? f.x * tls.orientation.x + f.y * tls.orientation.y
                           : std::hypot(f.x, f.y);
    pe_ghz[t] = p_cm * projected / kPlanck / kGigahertz;
    line_width[t] = tls.rates.total();
  }

  SpectroscopyScan scan;
  scan.schedule = schedule;
  scan.probe_frequencies_ghz = probe_ghz;
  scan.interaction_time_us = interaction_time_us;
  scan.noise_sigma = noise_sigma;
  scan.noise_seed = seed;
  scan.gamma1_q = qubit_rates.gamma1_q;

  const long steps = schedule.total_steps();
  const std::size_t nf = probe_ghz.size();
  scan.population.assign(static_cast<std::size_t>(steps) * nf, 0.0);
  const double t_s = interaction_time_us * 1e-6;

  parallel_for(steps, jobs, [&](long step) {
    std::vector<double> volts = schedule.voltages_at(step);
    std::vector<double> excess(nf, 0.0);
    for (std::size_t t = 0; t < n_tls; ++t) {
      const TlsDefect& tls = ensemble.defects[t];
      double eps = tls.epsilon0_over_h;
      for (std::size_t e = 0; e < n_elec; ++e)
        eps += gammas[t * n_elec + e] * volts[e];
      double f_res = std::hypot(tls.delta_over_h, eps);
      double g_hz = tls.delta_over_h / f_res * pe_ghz[t] * kGigahertz;
      double gamma = line_width[t];
      double hw = gamma / kTwoPi;
      double num = 2.0 * g_hz * g_hz * gamma;
      for (std::size_t f = 0; f < nf; ++f) {
        double det = (probe_ghz[f] - f_res) * kGigahertz;
        excess[f] += num / (hw * hw + det * det);
      }
    }
    double* row = &scan.population[static_cast<std::size_t>(step) * nf];
    for (std::size_t f = 0; f < nf; ++f) {
      double p = std::exp(-(qubit_rates.gamma1_q + excess[f]) * t_s);
      if (noise_sigma > 0)
        p += noise_sigma * counter_normal(seed, static_cast<uint64_t>(step), f);
      row[f] = std::clamp(p, 0.0, 1.0);
    }
  });
  return scan;
}

void save_scan(const SpectroscopyScan& scan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scan file: " + path);
  out << "tlsmap-scan v1\n";
  out << "v_start_v " << g17(scan.schedule.v_start) << '\n';
  out << "v_end_v " << g17(scan.schedule.v_end) << '\n';
  out << "segment_size_v " << g17(scan.schedule.segment_size) << '\n';
  out << "step_size_v " << g17(scan.schedule.step_size) << '\n';
  out << "electrode_order " << join_conductors(scan.schedule.electrode_order)
      << '\n';
  out << "interaction_time_us " << g17(scan.interaction_time_us) << '\n';
  out << "noise_sigma " << g17(scan.noise_sigma) << '\n';
  out << "noise_seed " << scan.noise_seed << '\n';
  out << "gamma1_q " << g17(scan.gamma1_q) << '\n';
  out << "freq_count " << scan.freq_count() << '\n';
  out << "freqs_ghz";
  for (double f : scan.probe_frequencies_ghz) out << ' ' << g17(f);
  out << '\n';
  out << "steps " << scan.steps() << '\n';
  out << "data\n";
  char buf[24];
  const std::size_t nf = scan.freq_count();
  for (long s = 0; s < scan.steps(); ++s) {
    const double* row = &scan.population[static_cast<std::size_t>(s) * nf];
    for (std::size_t f = 0; f < nf; ++f) {
      std::snprintf(buf, sizeof(buf), "%.9g", row[f]);
      out << buf << (f + 1 < nf ? ' ' : '\n');
    }
  }
  if (!out) throw IoError("write failed for scan file: " + path);
}

SpectroscopyScan load_scan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scan file: " + path);
  std::string magic, version;
  if (!(in >> magic >> version) || magic != "tlsmap-scan" || version != "v1")
    throw IoError("scan file " + path + ": unrecognized header");

  auto num = [&](const std::string& key) {
    return std::strtod(scan_header_value(in, path, key).c_str(), nullptr);
  };
  double v_start = num("v_start_v");
  double v_end = num("v_end_v");
  double segment = num("segment_size_v");
  double step = num("step_size_v");
  std::vector<Conductor> order =
      split_conductors(scan_header_value(in, path, "electrode_order"));
  double t_us = num("interaction_time_us");
  double sigma = num("noise_sigma");
  uint64_t seed = std::strtoull(
      scan_header_value(in, path, "noise_seed").c_str(), nullptr, 10);
  double gamma1_q = num("gamma1_q");
  long nf = std::strtol(scan_header_value(in, path, "freq_count").c_str(),
                        nullptr, 10);
  if (nf < 2) throw IoError("scan file " + path + ": bad freq_count");

  std::string key;
  if (!(in >> key) || key != "freqs_ghz")
    throw IoError("scan file " + path + ": missing frequency grid");
  std::vector<double> freqs(nf);
  for (long i = 0; i < nf; ++i)
    if (!(in >> freqs[i]))
      throw IoError("scan file " + path + ": truncated frequency grid");

  long steps = std::strtol(scan_header_value(in, path, "steps").c_str(),
                           nullptr, 10);
  if (!(in >> key) || key != "data")
    throw IoError("scan file " + path + ": missing data section");

  SpectroscopyScan scan;
  scan.schedule = build_schedule(v_start, v_end, segment, step, order);
  if (scan.schedule.total_steps() != steps) {
    std::ostringstream os;
    os << "scan file " << path << ": steps " << steps
       << " inconsistent with schedule (" << scan.schedule.total_steps() << ")";
    throw IoError(os.str());
  }
  scan.probe_frequencies_ghz = std::move(freqs);
  scan.interaction_time_us = t_us;
  scan.noise_sigma = sigma;
  scan.noise_seed = seed;
  scan.gamma1_q = gamma1_q;

  std::string rest((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const char* cur = rest.c_str();
  std::size_t n = static_cast<std::size_t>(steps) * nf;
  scan.population.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    char* end = nullptr;
    double v = std::strtod(cur, &end);
    if (end == cur)
      throw IoError("scan file " + path + ": truncated data at value " +
                    std::to_string(k));
    cur = end;
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
      throw IoError("scan file " + path + ": population outside [0,1] at value " +
                    std::to_string(k));
    scan.population[k] = std::clamp(v, 0.0, 1.0);
  }
  return scan;
}

}  // namespace tlsmap
