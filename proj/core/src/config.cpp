#include "tlsmap/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlsmap/errors.hpp"
#include "tlsmap/schedule.hpp"

namespace tlsmap {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const json* find(const json& doc, const char* key) {
  auto it = doc.find(key);
  return it == doc.end() ? nullptr : &*it;
}

double get_num(const json& doc, const char* key, double fallback) {
  const json* v = find(doc, key);
  if (!v) return fallback;
  if (!v->is_number())
    throw ConfigError(std::string("config key '") + key + "' must be a number");
  return v->get<double>();
}

long get_int(const json& doc, const char* key, long fallback) {
  const json* v = find(doc, key);
  if (!v) return fallback;
  if (!v->is_number_integer())
    throw ConfigError(std::string("config key '") + key +
                      "' must be an integer");
  return v->get<long>();
}

bool get_bool(const json& doc, const char* key, bool fallback) {
  const json* v = find(doc, key);
  if (!v) return fallback;
  if (!v->is_boolean())
    throw ConfigError(std::string("config key '") + key + "' must be a bool");
  return v->get<bool>();
}

std::string get_str(const json& doc, const char* key,
                    const std::string& fallback) {
  const json* v = find(doc, key);
  if (!v) return fallback;
  if (!v->is_string())
    throw ConfigError(std::string("config key '") + key +
                      "' must be a string");
  return v->get<std::string>();
}

std::string orientation_name(OrientationMode m) {
  return m == OrientationMode::QubitField ? "qubit_field" : "uniform";
}

OrientationMode orientation_from_name(const std::string& s) {
  if (s == "qubit_field") return OrientationMode::QubitField;
  if (s == "uniform") return OrientationMode::Uniform;
  throw ConfigError("unknown orientation mode '" + s +
                    "' (expected qubit_field or uniform)");
}

std::string gamma_mode_name(GammaMode m) {
  return m == GammaMode::Vector ? "vector" : "scalar";
}

GammaMode gamma_mode_from_name(const std::string& s) {
  if (s == "vector") return GammaMode::Vector;
  if (s == "scalar") return GammaMode::Scalar;
  throw ConfigError("unknown gamma mode '" + s +
                    "' (expected vector or scalar)");
}

json config_to_json(const RunConfig& c, bool include_execution) {
  json doc;
  doc["schema_version"] = 1;
  doc["layout_path"] = c.layout_path;
  doc["grid"] = {{"spacing_um", c.spacing_um}};
  doc["solver"] = {{"relaxation", c.solver.relaxation},
                   {"tolerance", c.solver.tolerance},
                   {"max_iterations", c.solver.max_iterations},
                   {"residual_check_interval", c.solver.residual_check_interval}};
  doc["qubit"] = {{"capacitance_ff", c.qubit_capacitance_ff},
                  {"frequency_ghz", c.qubit_frequency_ghz},
                  {"t1_us", c.qubit_t1_us},
                  {"t2_us", c.qubit_t2_us}};
  doc["detection"] = {{"kappa", c.kappa},
                      {"p_ref_ea", c.p_ref_ea},
                      {"e_min_v_per_m", c.e_min_v_per_m},
                      {"e_min_grid_v_per_m", c.e_min_grid_v_per_m}};
  doc["tls"] = {{"t1_us", c.tls_t1_us},
                {"t2_us", c.tls_t2_us},
                {"dipole_ea", c.dipole_ea},
                {"dipole_sigma_ea", c.dipole_sigma_ea},
                {"orientation", orientation_name(c.orientation)},
                {"gamma_mode", gamma_mode_name(c.gamma_mode)}};
  json enh = json::object();
  for (const auto& [region, factor] : c.enhancement)
    enh[region_name(region)] = factor;
  doc["ensemble"] = {{"count", c.tls_count},
                     {"seed", c.seed},
                     {"enhancement", enh},
                     {"weight_by_field_energy", c.weight_by_field_energy}};
  json order = json::array();
  for (Conductor e : c.electrode_order) order.push_back(conductor_name(e));
  doc["schedule"] = {{"v_start_v", c.v_start_v},
                     {"v_end_v", c.v_end_v},
                     {"segment_size_v", c.segment_size_v},
                     {"step_size_v", c.step_size_v},
                     {"electrode_order", order}};
  doc["scan"] = {{"window_lo_ghz", c.window_lo_ghz},
                 {"window_hi_ghz", c.window_hi_ghz},
                 {"freq_step_ghz", c.freq_step_ghz},
                 {"interaction_time_us", c.interaction_time_us},
                 {"noise_sigma", c.noise_sigma},
                 {"tls_per_scan", c.tls_per_scan}};
  doc["extraction"] = {{"min_depth", c.extraction.min_depth},
                       {"max_jump_ghz", c.extraction.max_jump_ghz},
                       {"min_points", c.extraction.min_points},
                       {"max_gap_steps", c.extraction.max_gap_steps},
                       {"sigma_floor", c.extraction.sigma_floor}};
  doc["fit"] = {{"max_iterations", c.fit.max_iterations},
                {"tolerance", c.fit.tolerance},
                {"min_voltage_span", c.fit.min_voltage_span},
                {"sigma_floor_ghz", c.fit.sigma_floor_ghz},
                {"min_points", c.fit_min_points},
                {"max_residual_ghz", c.fit_max_residual_ghz},
                {"max_delta_se_rel", c.fit_max_delta_se_rel}};
  doc["localization"] = {{"ratio_floor", c.ratio_floor},
                         {"band", c.localization_band}};
  if (c.circuit) {
    const CircuitParams& p = *c.circuit;
    doc["circuit"] = {{"c_q_ff", p.c_q_ff},
                      {"c_qi_ff", p.c_qi_ff},
                      {"i_c_na", p.i_c_na},
                      {"f_q_ghz", p.f_q_ghz},
                      {"re_z_eff_ohm", p.re_z_eff_ohm},
                      {"e_c_over_h_ghz", p.e_c_over_h_ghz},
                      {"e_j_over_h_ghz", p.e_j_over_h_ghz}};
  }
  json cuts = json::array();
  for (const auto& cut : c.cut_lines)
    cuts.push_back({{"name", cut.name},
                    {"a_um", json::array({cut.a.x, cut.a.y})},
                    {"b_um", json::array({cut.b.x, cut.b.y})},
                    {"samples", cut.samples}});
  doc["cut_lines"] = cuts;
  if (include_execution) {
    doc["output"] = {{"directory", c.output_dir}};
    doc["jobs"] = c.jobs;
  }
  return doc;
}

Point parse_point(const json& v, const char* key) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number())
    throw ConfigError(std::string(key) + " must be a [x, y] number pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

RunConfig config_from_json(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  long version = get_int(doc, "schema_version", 1);
  if (version != 1)
    throw ConfigError("unsupported config schema_version " +
                      std::to_string(version));

  RunConfig c;
  c.base_dir = base_dir;
  c.layout_path = get_str(doc, "layout_path", "");
  if (c.layout_path.empty())
    throw ConfigError("config is missing required key 'layout_path'");

  if (const json* grid = find(doc, "grid"))
    c.spacing_um = get_num(*grid, "spacing_um", c.spacing_um);

  if (const json* s = find(doc, "solver")) {
    c.solver.relaxation = get_num(*s, "relaxation", c.solver.relaxation);
    c.solver.tolerance = get_num(*s, "tolerance", c.solver.tolerance);
    c.solver.max_iterations =
        get_int(*s, "max_iterations", c.solver.max_iterations);
    c.solver.residual_check_interval = static_cast<int>(
        get_int(*s, "residual_check_interval", c.solver.residual_check_interval));
  }

  if (const json* q = find(doc, "qubit")) {
    c.qubit_capacitance_ff = get_num(*q, "capacitance_ff", c.qubit_capacitance_ff);
    c.qubit_frequency_ghz = get_num(*q, "frequency_ghz", c.qubit_frequency_ghz);
    c.qubit_t1_us = get_num(*q, "t1_us", c.qubit_t1_us);
    c.qubit_t2_us = get_num(*q, "t2_us", c.qubit_t2_us);
  }

  if (const json* d = find(doc, "detection")) {
    c.kappa = get_num(*d, "kappa", c.kappa);
    c.p_ref_ea = get_num(*d, "p_ref_ea", c.p_ref_ea);
    c.e_min_v_per_m = get_num(*d, "e_min_v_per_m", c.e_min_v_per_m);
    if (const json* grid = find(*d, "e_min_grid_v_per_m")) {
      if (!grid->is_array())
        throw ConfigError("detection.e_min_grid_v_per_m must be an array");
      c.e_min_grid_v_per_m.clear();
      for (const json& v : *grid) {
        if (!v.is_number())
          throw ConfigError("detection.e_min_grid_v_per_m entries must be numbers");
        c.e_min_grid_v_per_m.push_back(v.get<double>());
      }
    }
  }

  if (const json* t = find(doc, "tls")) {
    c.tls_t1_us = get_num(*t, "t1_us", c.tls_t1_us);
    c.tls_t2_us = get_num(*t, "t2_us", c.tls_t2_us);
    c.dipole_ea = get_num(*t, "dipole_ea", c.dipole_ea);
    c.dipole_sigma_ea = get_num(*t, "dipole_sigma_ea", c.dipole_sigma_ea);
    c.orientation = orientation_from_name(
        get_str(*t, "orientation", orientation_name(c.orientation)));
    c.gamma_mode = gamma_mode_from_name(
        get_str(*t, "gamma_mode", gamma_mode_name(c.gamma_mode)));
  }

  if (const json* e = find(doc, "ensemble")) {
    c.tls_count = static_cast<int>(get_int(*e, "count", c.tls_count));
    if (const json* seed = find(*e, "seed")) {
      if (!seed->is_number_integer() || seed->get<long long>() < 0)
        throw ConfigError("ensemble.seed must be a non-negative integer");
      c.seed = seed->get<uint64_t>();
    }
    if (const json* enh = find(*e, "enhancement")) {
      if (!enh->is_object())
        throw ConfigError("ensemble.enhancement must be an object");
      for (auto it = enh->begin(); it != enh->end(); ++it) {
        if (!it.value().is_number())
          throw ConfigError("ensemble.enhancement values must be numbers");
        c.enhancement[region_from_name(it.key())] = it.value().get<double>();
      }
    }
    c.weight_by_field_energy =
        get_bool(*e, "weight_by_field_energy", c.weight_by_field_energy);
  }

  if (const json* s = find(doc, "schedule")) {
    c.v_start_v = get_num(*s, "v_start_v", c.v_start_v);
    c.v_end_v = get_num(*s, "v_end_v", c.v_end_v);
    c.segment_size_v = get_num(*s, "segment_size_v", c.segment_size_v);
    c.step_size_v = get_num(*s, "step_size_v", c.step_size_v);
    if (const json* order = find(*s, "electrode_order")) {
      if (!order->is_array())
        throw ConfigError("schedule.electrode_order must be an array");
      c.electrode_order.clear();
      for (const json& v : *order) {
        if (!v.is_string())
          throw ConfigError("schedule.electrode_order entries must be strings");
        c.electrode_order.push_back(conductor_from_name(v.get<std::string>()));
      }
    }
  }

  if (const json* s = find(doc, "scan")) {
    c.window_lo_ghz = get_num(*s, "window_lo_ghz", c.window_lo_ghz);
    c.window_hi_ghz = get_num(*s, "window_hi_ghz", c.window_hi_ghz);
    c.freq_step_ghz = get_num(*s, "freq_step_ghz", c.freq_step_ghz);
    c.interaction_time_us =
        get_num(*s, "interaction_time_us", c.interaction_time_us);
    c.noise_sigma = get_num(*s, "noise_sigma", c.noise_sigma);
    c.tls_per_scan = static_cast<int>(get_int(*s, "tls_per_scan", c.tls_per_scan));
  }

  if (const json* x = find(doc, "extraction")) {
    c.extraction.min_depth = get_num(*x, "min_depth", c.extraction.min_depth);
    c.extraction.max_jump_ghz =
        get_num(*x, "max_jump_ghz", c.extraction.max_jump_ghz);
    c.extraction.min_points =
        static_cast<int>(get_int(*x, "min_points", c.extraction.min_points));
    c.extraction.max_gap_steps = static_cast<int>(
        get_int(*x, "max_gap_steps", c.extraction.max_gap_steps));
    c.extraction.sigma_floor =
        get_num(*x, "sigma_floor", c.extraction.sigma_floor);
  }

  if (const json* f = find(doc, "fit")) {
    c.fit.max_iterations =
        static_cast<int>(get_int(*f, "max_iterations", c.fit.max_iterations));
    c.fit.tolerance = get_num(*f, "tolerance", c.fit.tolerance);
    c.fit.min_voltage_span =
        get_num(*f, "min_voltage_span", c.fit.min_voltage_span);
    c.fit.sigma_floor_ghz =
        get_num(*f, "sigma_floor_ghz", c.fit.sigma_floor_ghz);
    c.fit_min_points =
        static_cast<int>(get_int(*f, "min_points", c.fit_min_points));
    c.fit_max_residual_ghz =
        get_num(*f, "max_residual_ghz", c.fit_max_residual_ghz);
    c.fit_max_delta_se_rel =
        get_num(*f, "max_delta_se_rel", c.fit_max_delta_se_rel);
  }

  if (const json* l = find(doc, "localization")) {
    c.ratio_floor = get_num(*l, "ratio_floor", c.ratio_floor);
    c.localization_band = get_num(*l, "band", c.localization_band);
  }

  if (const json* p = find(doc, "circuit")) {
    CircuitParams params;
    params.c_q_ff = get_num(*p, "c_q_ff", 0.0);
    if (const json* cqi = find(*p, "c_qi_ff")) {
      if (!cqi->is_array())
        throw ConfigError("circuit.c_qi_ff must be an array");
      for (const json& v : *cqi) {
        if (!v.is_number())
          throw ConfigError("circuit.c_qi_ff entries must be numbers");
        params.c_qi_ff.push_back(v.get<double>());
      }
    }
    params.i_c_na = get_num(*p, "i_c_na", 0.0);
    params.f_q_ghz = get_num(*p, "f_q_ghz", c.qubit_frequency_ghz);
    params.re_z_eff_ohm = get_num(*p, "re_z_eff_ohm", 0.0);
    params.e_c_over_h_ghz = get_num(*p, "e_c_over_h_ghz", 0.0);
    params.e_j_over_h_ghz = get_num(*p, "e_j_over_h_ghz", 0.0);
    c.circuit = params;
  }

  if (const json* cuts = find(doc, "cut_lines")) {
    if (!cuts->is_array()) throw ConfigError("cut_lines must be an array");
    for (const json& v : *cuts) {
      RunConfig::CutLine cut;
      cut.name = get_str(v, "name", "");
      if (cut.name.empty())
        throw ConfigError("every cut line needs a non-empty 'name'");
      const json* a = find(v, "a_um");
      const json* b = find(v, "b_um");
      if (!a || !b) throw ConfigError("cut line '" + cut.name +
                                      "' needs 'a_um' and 'b_um' endpoints");
      cut.a = parse_point(*a, "cut_lines.a_um");
      cut.b = parse_point(*b, "cut_lines.b_um");
      cut.samples = static_cast<int>(get_int(v, "samples", cut.samples));
      if (cut.samples < 2)
        throw ConfigError("cut line '" + cut.name + "' needs samples >= 2");
      c.cut_lines.push_back(cut);
    }
  }

  if (const json* out = find(doc, "output"))
    c.output_dir = get_str(*out, "directory", c.output_dir);
  c.jobs = static_cast<int>(get_int(doc, "jobs", c.jobs));

  return c;
}

}  // namespace

RateSet RunConfig::qubit_rates() const {
  RateSet r;
  r.gamma1_q = 1.0 / (qubit_t1_us * 1e-6);
  r.gamma2_q = qubit_t2_us > 0.0 ? 1.0 / (qubit_t2_us * 1e-6) : r.gamma1_q / 2.0;
  return r;
}

RateSet RunConfig::combined_rates() const {
  return RateSet::from_lifetimes(tls_t1_us, tls_t2_us, qubit_t1_us, qubit_t2_us);
}

EnsembleSpec RunConfig::ensemble_spec() const {
  EnsembleSpec spec;
  spec.count = tls_count;
  spec.enhancement = enhancement;
  spec.weight_by_field_energy = weight_by_field_energy;
  spec.dipole_moment_ea = dipole_ea;
  spec.dipole_sigma_ea = dipole_sigma_ea;
  spec.orientation = orientation;
  spec.rates = combined_rates();
  spec.window_lo_ghz = window_lo_ghz;
  spec.window_hi_ghz = window_hi_ghz;
  spec.seed = seed;
  return spec;
}

std::string RunConfig::resolved_layout_path() const {
  fs::path p(layout_path);
  if (p.is_absolute() || base_dir.empty()) return layout_path;
  return (fs::path(base_dir) / p).string();
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string dir = fs::path(path).parent_path().string();
  if (dir.empty()) dir = ".";
  return config_from_json_text(buffer.str(), dir);
}

RunConfig config_from_json_text(const std::string& text,
                                const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(doc, base_dir);
}

void save_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << config_to_json_text(config) << "\n";
}

std::string config_to_json_text(const RunConfig& config) {
  return config_to_json(config, true).dump(2);
}

std::string canonical_config_text(const RunConfig& config) {
  return config_to_json(config, false).dump();
}

void validate_config(const RunConfig& config) {
  if (config.spacing_um <= 0.0)
    throw ConfigError("grid.spacing_um must be positive");
  if (config.qubit_capacitance_ff <= 0.0 || config.qubit_frequency_ghz <= 0.0)
    throw ConfigError("qubit capacitance and frequency must be positive");
  if (config.qubit_t1_us <= 0.0)
    throw ConfigError("qubit.t1_us must be positive");
  if (config.kappa <= 0.0) throw ConfigError("detection.kappa must be positive");
  if (config.p_ref_ea <= 0.0)
    throw ConfigError("detection.p_ref_ea must be positive");
  if (config.e_min_v_per_m < 0.0)
    throw ConfigError("detection.e_min_v_per_m must not be negative");
  for (double e : config.e_min_grid_v_per_m)
    if (e < 0.0)
      throw ConfigError("detection.e_min_grid_v_per_m must not be negative");
  if (config.tls_t1_us <= 0.0 || config.tls_t2_us <= 0.0)
    throw ConfigError("tls lifetimes must be positive");
  if (config.dipole_ea <= 0.0)
    throw ConfigError("tls.dipole_ea must be positive");
  if (config.dipole_sigma_ea < 0.0)
    throw ConfigError("tls.dipole_sigma_ea must not be negative");
  if (config.tls_count < 0)
    throw ConfigError("ensemble.count must not be negative");
  for (const auto& [region, factor] : config.enhancement)
    if (factor < 0.0)
      throw ConfigError("enhancement factor for " + region_name(region) +
                        " must not be negative");
  if (config.window_lo_ghz <= 0.0 || config.window_hi_ghz <= config.window_lo_ghz)
    throw ConfigError("scan window must satisfy 0 < lo < hi");
  if (config.freq_step_ghz <= 0.0)
    throw ConfigError("scan.freq_step_ghz must be positive");
  if (config.interaction_time_us <= 0.0)
    throw ConfigError("scan.interaction_time_us must be positive");
  if (config.noise_sigma < 0.0)
    throw ConfigError("scan.noise_sigma must not be negative");
  if (config.tls_per_scan <= 0)
    throw ConfigError("scan.tls_per_scan must be positive");
  if (config.fit_min_points < 2)
    throw ConfigError("fit.min_points must be at least 2");
  if (config.fit_max_residual_ghz <= 0.0)
    throw ConfigError("fit.max_residual_ghz must be positive");
  if (config.ratio_floor < 0.0)
    throw ConfigError("localization.ratio_floor must not be negative");
  if (config.localization_band < 0.0)
    throw ConfigError("localization.band must not be negative");
  if (config.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (config.circuit) config.circuit->validate();

  // Fails early on bad schedule parameters or electrodes.
  build_schedule(config.v_start_v, config.v_end_v, config.segment_size_v,
                 config.step_size_v, config.electrode_order);

  std::string layout = config.resolved_layout_path();
  if (!fs::exists(layout))
    throw ConfigError("layout file does not exist: " + layout);
}

}  // namespace tlsmap
