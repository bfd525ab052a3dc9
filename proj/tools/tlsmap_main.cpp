// Command-line front end for the TLS mapping pipeline. Each subcommand runs
// one stage against a run directory; `pipeline` runs them all and writes the
// manifest. Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tlsmap/config.hpp"
#include "tlsmap/errors.hpp"
#include "tlsmap/geometry.hpp"
#include "tlsmap/pipeline.hpp"

namespace {

using tlsmap::RunConfig;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> e_min;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config_path, "run configuration (JSON)")
      ->required();
  cmd->add_option("-o,--out", flags.out_dir,
                  "run directory (default: output.directory from the config)");
  cmd->add_option("--seed", flags.seed, "override the ensemble/noise seed");
  cmd->add_option("-j,--jobs", flags.jobs, "worker threads");
  cmd->add_option("--e-min", flags.e_min,
                  "override the headline detection threshold (V/m)");
}

RunConfig load_with_overrides(const CommonFlags& flags, std::string* out_dir) {
  RunConfig config = tlsmap::load_config(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  if (flags.e_min) config.e_min_v_per_m = *flags.e_min;
  tlsmap::validate_config(config);
  *out_dir = flags.out_dir.empty() ? config.output_dir : flags.out_dir;
  return config;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings)
    std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voltage-swept TLS spectroscopy: fields, synthetic scans, "
               "hyperbola fits, and defect localization"};
  app.require_subcommand(1);

  CommonFlags validate_flags;
  CLI::App* cmd_validate =
      app.add_subcommand("validate-config", "parse and check a configuration");
  cmd_validate->add_option("-c,--config", validate_flags.config_path,
                           "run configuration (JSON)")
      ->required();

  std::string layout_path = "reference_layout.json";
  CLI::App* cmd_layout = app.add_subcommand(
      "make-layout", "write the built-in reference circuit layout");
  cmd_layout->add_option("-o,--out", layout_path, "output JSON path");

  struct StageCmd {
    const char* name;
    const char* help;
    std::vector<std::string> (*fn)(const RunConfig&, const std::string&);
    CommonFlags flags;
  };
  StageCmd stages[] = {
      {"fields", "solve electrode and qubit field maps", tlsmap::stage_fields,
       {}},
      {"synthesize", "sample a defect ensemble on the detectable area",
       tlsmap::stage_synthesize, {}},
      {"simulate", "render voltage-swept spectroscopy scans",
       tlsmap::stage_simulate, {}},
      {"fit", "extract traces and fit hyperbolas", tlsmap::stage_fit, {}},
      {"localize", "build residual maps and localize each fit",
       tlsmap::stage_localize, {}},
      {"analyze", "population statistics and summary outputs",
       tlsmap::stage_analyze, {}},
  };
  for (StageCmd& stage : stages)
    add_common(app.add_subcommand(stage.name, stage.help), stage.flags);

  CommonFlags pipeline_flags;
  CLI::App* cmd_pipeline =
      app.add_subcommand("pipeline", "run every stage and write the manifest");
  add_common(cmd_pipeline, pipeline_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (cmd_validate->parsed()) {
      RunConfig config = tlsmap::load_config(validate_flags.config_path);
      tlsmap::validate_config(config);
      std::cout << "ok: " << validate_flags.config_path << "\n";
      return 0;
    }
    if (cmd_layout->parsed()) {
      tlsmap::CircuitLayout layout = tlsmap::make_reference_layout();
      tlsmap::save_layout(layout, layout_path);
      std::cout << "wrote " << layout_path << "\n";
      return 0;
    }
    for (StageCmd& stage : stages) {
      if (!app.get_subcommand(stage.name)->parsed()) continue;
      std::string out_dir;
      RunConfig config = load_with_overrides(stage.flags, &out_dir);
      print_warnings(stage.fn(config, out_dir));
      std::cout << stage.name << ": done (" << out_dir << ")\n";
      return 0;
    }
    if (cmd_pipeline->parsed()) {
      std::string out_dir;
      RunConfig config = load_with_overrides(pipeline_flags, &out_dir);
      tlsmap::PipelineReport report = tlsmap::run_pipeline(config, out_dir);
      print_warnings(report.warnings);
      for (const tlsmap::StageTiming& t : report.timings) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "  %-10s %8.2f s", t.stage.c_str(),
                      t.seconds);
        std::cout << buf << "\n";
      }
      char hex[24];
      std::snprintf(hex, sizeof(hex), "%016llx",
                    static_cast<unsigned long long>(report.manifest_hash));
      std::cout << "manifest " << hex << " (" << out_dir << ")\n";
      return 0;
    }
  } catch (const tlsmap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tlsmap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
