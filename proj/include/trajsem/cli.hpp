#pragma once

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "trajsem/pipeline.hpp"

namespace trajsem {

/// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 backend
/// error.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitBackend = 3,
};

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{
      "trajsem: turn stay-point trajectories into region profiles, prompt-ready "
      "trajectory chains and LLM-inferred daily activity scenarios"};
  app.fallthrough();  // global flags may follow the subcommand
  app.require_subcommand(1);
  app.set_version_flag("--version", "trajsem 0.1.0");

  std::string config_path;
  PipelineOverrides ov;
  app.add_option("--config", config_path, "pipeline config file (JSON)")->required();
  app.add_option("--seed", ov.seed, "override the sampling seed");
  app.add_option("--out-dir", ov.out_dir, "override the artifact output directory");
  app.add_option("--pois", ov.pois, "override the POI CSV path");
  app.add_option("--regions", ov.regions, "override the region GeoJSON path");
  app.add_option("--taxonomy", ov.taxonomy, "override the category taxonomy path");
  app.add_option("--template", ov.template_path, "override the prompt template path");
  app.add_option("--categories", ov.categories_path,
                 "override the occupational category list path");
  app.add_option("--date", ov.date, "process only this calendar day (YYYY-MM-DD)");
  app.add_option("--slots", ov.slots_per_day, "override slots per day (L)");
  app.add_option("--min-coverage", ov.min_coverage_fraction,
                 "override the minimum observed-coverage fraction");
  app.add_option("--scenarios", ov.scenario_count, "override the requested scenario count");
  app.add_option("--backend", ov.backend_kind, "override the backend kind (http_chat|replay)");
  app.add_option("--model", ov.model, "override the model id");
  app.add_option("--temperature", ov.temperature, "override the sampling temperature");
  app.add_option("--parallelism", ov.parallelism, "override the batch parallelism");
  app.add_option("--cache-dir", ov.cache_dir, "override the response cache directory");
  app.add_option("--report-out", ov.report_out, "override the validation report path");

  app.add_subcommand("profile", "compute per-region POI category profiles");
  app.add_subcommand("format", "slot stays into trajectory chains and render mobility info");
  app.add_subcommand("infer", "render prompts, query the backend, parse and validate");
  app.add_subcommand("validate", "re-parse and re-validate existing responses");
  app.add_subcommand("run", "profile, format and infer in sequence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    PipelineConfig cfg = load_pipeline_config(config_path);
    apply_overrides(cfg, ov);

    if (app.got_subcommand("profile")) {
      cmd_profile(cfg, out);
    } else if (app.got_subcommand("format")) {
      cmd_format(cfg, out);
    } else if (app.got_subcommand("infer")) {
      cmd_infer(cfg, out);
    } else if (app.got_subcommand("validate")) {
      cmd_validate(cfg, out);
    } else {
      cmd_run(cfg, out);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendUnavailable& e) {
    err << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const FixtureMissing& e) {
    err << "error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace trajsem
