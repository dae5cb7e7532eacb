#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "trajsem/chain.hpp"
#include "trajsem/gateway.hpp"
#include "trajsem/profile.hpp"
#include "trajsem/prompt.hpp"
#include "trajsem/result.hpp"

namespace trajsem {

// ---------------- configuration ----------------

/// Full pipeline configuration. The declarative config file is the
/// source of truth; a handful of flags may override it (flags win).
struct PipelineConfig {
  // input paths
  std::filesystem::path pois;
  std::filesystem::path regions;
  std::filesystem::path taxonomy;
  std::filesystem::path stays;
  std::filesystem::path template_path;    // empty: built-in default template
  std::filesystem::path categories_path;  // empty: built-in category list
  std::filesystem::path out_dir = "out";
  std::filesystem::path report_out;       // empty: <out_dir>/report.jsonl

  // semantic knobs
  int slots_per_day = 24;         // L
  int draws_per_group = 3;        // K
  std::uint64_t seed = 0;
  double min_coverage_fraction = 0.5;
  int scenario_count = 3;
  std::optional<CivilDate> date;  // only this calendar day when set

  // request shape
  std::string model_id = "gpt-4";
  double temperature = 0.1;
  int max_tokens = 2048;

  // transport / backend
  BackendConfig backend;
};

namespace detail {

inline void check_known_keys(const json& obj, const std::set<std::string>& known,
                             const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key \"" + key + "\" in " + where);
    }
  }
}

inline std::filesystem::path resolve_config_path(const std::filesystem::path& base,
                                                 const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

inline void validate_pipeline_config(const PipelineConfig& cfg) {
  if (cfg.slots_per_day < 1 || kMinutesPerDay % cfg.slots_per_day != 0) {
    throw ConfigError("config: slots_per_day must be a positive divisor of 1440, got " +
                      std::to_string(cfg.slots_per_day));
  }
  if (cfg.draws_per_group < 1) {
    throw ConfigError("config: draws_per_group must be >= 1");
  }
  if (cfg.min_coverage_fraction < 0.0 || cfg.min_coverage_fraction > 1.0) {
    throw ConfigError("config: min_coverage_fraction must lie in [0, 1]");
  }
  if (cfg.scenario_count < 1) throw ConfigError("config: scenario_count must be >= 1");
  if (cfg.temperature < 0.0) throw ConfigError("config: temperature must be >= 0");
  if (cfg.max_tokens < 1) throw ConfigError("config: max_tokens must be >= 1");
  if (cfg.backend.max_retries < 0) throw ConfigError("config: max_retries must be >= 0");
  if (cfg.backend.parallelism < 1) throw ConfigError("config: parallelism must be >= 1");
}

/// Loads the declarative JSON config. Relative paths inside the file are
/// resolved against the config file's own directory; unknown keys are
/// rejected so typos fail loudly.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const IoError& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config " + path.string() + ": not a JSON object");

  detail::check_known_keys(
      doc,
      {"pois", "regions", "taxonomy", "stays", "template", "categories", "out_dir",
       "report_out", "slots_per_day", "draws_per_group", "seed", "min_coverage_fraction",
       "scenario_count", "date", "backend"},
      "top level");

  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");
  PipelineConfig cfg;
  try {
    cfg.pois = detail::resolve_config_path(base, doc.value("pois", std::string()));
    cfg.regions = detail::resolve_config_path(base, doc.value("regions", std::string()));
    cfg.taxonomy = detail::resolve_config_path(base, doc.value("taxonomy", std::string()));
    cfg.stays = detail::resolve_config_path(base, doc.value("stays", std::string()));
    cfg.template_path = detail::resolve_config_path(base, doc.value("template", std::string()));
    cfg.categories_path =
        detail::resolve_config_path(base, doc.value("categories", std::string()));
    if (doc.contains("out_dir")) {
      cfg.out_dir = detail::resolve_config_path(base, doc["out_dir"].get<std::string>());
    }
    cfg.report_out = detail::resolve_config_path(base, doc.value("report_out", std::string()));
    if (doc.contains("date")) {
      try {
        cfg.date = parse_civil_date(doc["date"].get<std::string>());
      } catch (const ParseError& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
      }
    }
    cfg.slots_per_day = doc.value("slots_per_day", cfg.slots_per_day);
    cfg.draws_per_group = doc.value("draws_per_group", cfg.draws_per_group);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.min_coverage_fraction = doc.value("min_coverage_fraction", cfg.min_coverage_fraction);
    cfg.scenario_count = doc.value("scenario_count", cfg.scenario_count);

    if (doc.contains("backend")) {
      const json& b = doc["backend"];
      detail::check_known_keys(b,
                               {"kind", "model", "temperature", "max_tokens", "endpoint_url",
                                "auth_token_env", "timeout_s", "max_retries", "backoff_base_ms",
                                "parallelism", "cache_dir", "fixture_dir"},
                               "backend");
      if (b.contains("kind")) cfg.backend.kind = parse_backend_kind(b["kind"].get<std::string>());
      cfg.model_id = b.value("model", cfg.model_id);
      cfg.temperature = b.value("temperature", cfg.temperature);
      cfg.max_tokens = b.value("max_tokens", cfg.max_tokens);
      cfg.backend.endpoint_url = b.value("endpoint_url", cfg.backend.endpoint_url);
      cfg.backend.auth_token_env = b.value("auth_token_env", cfg.backend.auth_token_env);
      cfg.backend.timeout_s = b.value("timeout_s", cfg.backend.timeout_s);
      cfg.backend.max_retries = b.value("max_retries", cfg.backend.max_retries);
      cfg.backend.backoff_base_ms = b.value("backoff_base_ms", cfg.backend.backoff_base_ms);
      cfg.backend.parallelism = b.value("parallelism", cfg.backend.parallelism);
      if (b.contains("cache_dir")) {
        cfg.backend.cache_dir =
            detail::resolve_config_path(base, b["cache_dir"].get<std::string>()).string();
      }
      if (b.contains("fixture_dir")) {
        cfg.backend.fixture_dir =
            detail::resolve_config_path(base, b["fixture_dir"].get<std::string>()).string();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  validate_pipeline_config(cfg);
  return cfg;
}

/// Flag overrides; flags win over the config file.
struct PipelineOverrides {
  std::optional<std::filesystem::path> pois, regions, taxonomy, template_path, categories_path;
  std::optional<std::filesystem::path> out_dir, report_out, cache_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> slots_per_day, scenario_count, parallelism;
  std::optional<double> min_coverage_fraction, temperature;
  std::optional<std::string> date, backend_kind, model;
};

inline void apply_overrides(PipelineConfig& cfg, const PipelineOverrides& ov) {
  if (ov.pois) cfg.pois = *ov.pois;
  if (ov.regions) cfg.regions = *ov.regions;
  if (ov.taxonomy) cfg.taxonomy = *ov.taxonomy;
  if (ov.template_path) cfg.template_path = *ov.template_path;
  if (ov.categories_path) cfg.categories_path = *ov.categories_path;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (ov.report_out) cfg.report_out = *ov.report_out;
  if (ov.cache_dir) cfg.backend.cache_dir = ov.cache_dir->string();
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.slots_per_day) cfg.slots_per_day = *ov.slots_per_day;
  if (ov.scenario_count) cfg.scenario_count = *ov.scenario_count;
  if (ov.parallelism) cfg.backend.parallelism = *ov.parallelism;
  if (ov.min_coverage_fraction) cfg.min_coverage_fraction = *ov.min_coverage_fraction;
  if (ov.temperature) cfg.temperature = *ov.temperature;
  if (ov.model) cfg.model_id = *ov.model;
  if (ov.backend_kind) cfg.backend.kind = parse_backend_kind(*ov.backend_kind);
  if (ov.date) {
    try {
      cfg.date = parse_civil_date(*ov.date);
    } catch (const ParseError& e) {
      throw ConfigError(std::string("--date: ") + e.what());
    }
  }
  validate_pipeline_config(cfg);
}

// ---------------- provenance ----------------

/// Occupational categories: one per line, '#' comments and blank lines
/// ignored; the built-in list when no file is configured.
inline std::vector<std::string> resolved_categories(const PipelineConfig& cfg) {
  if (cfg.categories_path.empty()) return default_occupational_categories();
  std::vector<std::string> categories;
  std::istringstream in(read_text_file(cfg.categories_path));
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    categories.push_back(t);
  }
  if (categories.empty()) {
    throw ConfigError("config: category file " + cfg.categories_path.string() +
                      " contains no categories");
  }
  return categories;
}

inline std::string effective_template_text(const PipelineConfig& cfg) {
  return cfg.template_path.empty() ? default_template_text()
                                   : read_text_file(cfg.template_path);
}

/// Canonical JSON of the semantically meaningful configuration. Paths and
/// operational knobs (cache dirs, retries, timeouts, parallelism) are
/// excluded so that re-running the same semantic setup elsewhere hashes
/// identically.
inline json config_snapshot(const PipelineConfig& cfg) {
  return json{{"slots_per_day", cfg.slots_per_day},
              {"draws_per_group", cfg.draws_per_group},
              {"seed", cfg.seed},
              {"min_coverage_fraction", cfg.min_coverage_fraction},
              {"scenario_count", cfg.scenario_count},
              {"date", cfg.date ? to_string(*cfg.date) : std::string()},
              {"occupational_categories", resolved_categories(cfg)},
              {"template_hash", sha256_hex(effective_template_text(cfg))},
              {"backend_kind", backend_kind_name(cfg.backend.kind)},
              {"model", cfg.model_id},
              {"temperature", cfg.temperature},
              {"max_tokens", cfg.max_tokens}};
}

inline std::string config_hash(const PipelineConfig& cfg) {
  return sha256_hex(config_snapshot(cfg).dump());
}

inline std::filesystem::path report_path(const PipelineConfig& cfg) {
  return cfg.report_out.empty() ? cfg.out_dir / "report.jsonl" : cfg.report_out;
}

inline json stage_meta(const PipelineConfig& cfg, const std::string& stage) {
  return json{{"stage", stage},
              {"config_hash", config_hash(cfg)},
              {"template_hash", sha256_hex(effective_template_text(cfg))}};
}

// ---------------- stage plumbing ----------------

namespace detail {

/// Rethrows the in-flight pipeline error with the stage name prefixed,
/// preserving the concrete type (exit-code mapping depends on it).
[[noreturn]] inline void rethrow_with_stage(const std::string& stage) {
  auto tag = [&](const Error& e) { return stage + ": " + e.what(); };
  try {
    throw;
  } catch (const ParseFailure& e) {
    throw ParseFailure(tag(e), e.raw_text);
  } catch (const FixtureMissing& e) {
    throw FixtureMissing(tag(e));
  } catch (const BackendUnavailable& e) {
    throw BackendUnavailable(tag(e));
  } catch (const ConfigError& e) {
    throw ConfigError(tag(e));
  } catch (const UnknownRegion& e) {
    throw UnknownRegion(tag(e));
  } catch (const EmptyRegion& e) {
    throw EmptyRegion(tag(e));
  } catch (const EmptyGroup& e) {
    throw EmptyGroup(tag(e));
  } catch (const EmptyDay& e) {
    throw EmptyDay(tag(e));
  } catch (const IoError& e) {
    throw IoError(tag(e));
  } catch (const ParseError& e) {
    throw ParseError(tag(e));
  } catch (const Error& e) {
    throw Error(tag(e));
  }
}

template <typename Fn>
inline void with_stage(const std::string& stage, Fn&& fn) {
  try {
    std::forward<Fn>(fn)();
  } catch (const Error&) {
    rethrow_with_stage(stage);
  }
}

/// Reads a JSON-lines artifact, skipping the leading _meta record.
inline std::vector<json> read_artifact(const std::filesystem::path& path) {
  std::vector<json> records;
  for_each_jsonl(path, [&](const json& j, size_t) {
    if (j.is_object() && j.contains("_meta")) return;
    records.push_back(j);
  });
  return records;
}

inline SlottedTrajectory trajectory_from_chain(const TrajectoryChain& chain) {
  SlottedTrajectory traj;
  traj.user_pseudo_id = chain.user_pseudo_id;
  traj.date = chain.date;
  traj.weekday = weekday_mon1(chain.date);
  for (const ChainRecord& rec : chain.records) traj.regions.push_back(rec.region_id);
  return traj;
}

}  // namespace detail

// ---------------- stages ----------------

/// profile: POIs + regions + taxonomy -> per-region TF-IDF profiles.
/// Writes profiles.jsonl, rejected.jsonl (bad POI rows) and
/// profile_stats.json.
inline void cmd_profile(const PipelineConfig& cfg, std::ostream& log) {
  detail::with_stage("cmd_profile", [&] {
    const CategoryTaxonomy taxonomy = load_taxonomy(cfg.taxonomy);
    const RegionRegistry registry = load_regions(cfg.regions);
    const PoiLoadResult pois = load_pois(cfg.pois, taxonomy);
    const auto histograms = assign_pois_to_regions(pois.records, registry, taxonomy);
    const auto df = compute_document_frequency(histograms, registry.size());

    const json meta = stage_meta(cfg, "profile");
    std::ostringstream profile_lines;
    profile_lines << json{{"_meta", meta}}.dump() << "\n";
    int profiled = 0, empty_regions = 0;
    for (const auto& [region_id, histogram] : histograms) {
      if (histogram.total == 0) {
        ++empty_regions;
        continue;  // no POIs, no profile; downstream renders "unprofiled"
      }
      const RegionProfile profile = compute_tfidf(region_id, histogram, df, registry.size());
      profile_lines << profile_to_json(profile).dump() << "\n";
      ++profiled;
    }
    write_text_file(cfg.out_dir / "profiles.jsonl", profile_lines.str());

    std::ostringstream rejected_lines;
    rejected_lines << json{{"_meta", meta}}.dump() << "\n";
    for (const std::string& err : pois.row_errors) {
      rejected_lines << json{{"row_error", err}}.dump() << "\n";
    }
    write_text_file(cfg.out_dir / "rejected.jsonl", rejected_lines.str());

    const json stats{{"config_hash", meta["config_hash"]},
                     {"template_hash", meta["template_hash"]},
                     {"regions", registry.size()},
                     {"profiled", profiled},
                     {"empty_regions", empty_regions},
                     {"pois_loaded", pois.records.size()},
                     {"pois_rejected", pois.rejected}};
    write_text_file(cfg.out_dir / "profile_stats.json", stats.dump(2) + "\n");

    log << "cmd_profile: " << registry.size() << " regions (" << profiled << " profiled, "
        << empty_regions << " empty), " << pois.records.size() << " pois ("
        << pois.rejected << " rejected)\n";
  });
}

/// format: stays + profiles -> trajectory chains and rendered
/// mobility_info. Writes chains.jsonl, mobility.jsonl and skipped.jsonl.
inline void cmd_format(const PipelineConfig& cfg, std::ostream& log) {
  detail::with_stage("cmd_format", [&] {
    const CategoryTaxonomy taxonomy = load_taxonomy(cfg.taxonomy);
    const RegionRegistry registry = load_regions(cfg.regions);

    std::map<RegionId, GroupedWeights> grouped;
    for (const json& j : detail::read_artifact(cfg.out_dir / "profiles.jsonl")) {
      const RegionProfile profile = profile_from_json(j, taxonomy.size());
      grouped.emplace(profile.region_id, group_weights(profile, taxonomy));
    }

    const std::vector<StayRecord> stays = load_stays(cfg.stays);
    const auto user_days = group_user_days(stays);

    SamplerConfig sampler;
    sampler.draws_per_group = cfg.draws_per_group;
    sampler.seed = cfg.seed;

    const json meta = stage_meta(cfg, "format");
    std::ostringstream chain_lines, mobility_lines, skipped_lines;
    chain_lines << json{{"_meta", meta}}.dump() << "\n";
    mobility_lines << json{{"_meta", meta}}.dump() << "\n";
    skipped_lines << json{{"_meta", meta}}.dump() << "\n";

    int accepted = 0, skipped = 0;
    for (const auto& [key, day_stays] : user_days) {
      const auto& [user, date] = key;
      if (cfg.date && !(date == *cfg.date)) continue;
      const SlottedTrajectory traj = slot_trajectory(day_stays, date, cfg.slots_per_day);
      const ValidationOutcome outcome = validate_trajectory(traj, cfg.min_coverage_fraction);
      if (!outcome.accepted) {
        skipped_lines << json{{"user_pseudo_id", user},
                              {"date", to_string(date)},
                              {"reason", outcome.reason}}
                             .dump()
                      << "\n";
        ++skipped;
        continue;
      }
      const TrajectoryChain chain = build_chain(traj, grouped, sampler, registry);
      chain_lines << chain_to_json(chain).dump() << "\n";
      mobility_lines << json{{"user_pseudo_id", user},
                             {"date", to_string(date)},
                             {"trajectory_key", trajectory_key(user, date)},
                             {"mobility_info", render_mobility_info(chain, taxonomy)}}
                            .dump()
                     << "\n";
      ++accepted;
    }
    write_text_file(cfg.out_dir / "chains.jsonl", chain_lines.str());
    write_text_file(cfg.out_dir / "mobility.jsonl", mobility_lines.str());
    write_text_file(cfg.out_dir / "skipped.jsonl", skipped_lines.str());

    log << "cmd_format: " << user_days.size() << " user-days (" << accepted << " chains, "
        << skipped << " skipped)\n";
  });
}

namespace detail {

struct PreparedPrompt {
  std::string user_pseudo_id;
  CivilDate date;
  SlottedTrajectory traj;
  PromptBundle bundle;
  LlmRequest request;
  std::string request_key;
};

/// Loads chains + mobility and renders one prompt per chain.
inline std::vector<PreparedPrompt> prepare_prompts(const PipelineConfig& cfg) {
  const PromptTemplate tmpl = parse_template(effective_template_text(cfg));
  PromptConfig prompt_cfg;
  prompt_cfg.occupational_categories = resolved_categories(cfg);
  prompt_cfg.scenario_count = cfg.scenario_count;

  std::map<std::string, std::string> mobility;  // trajectory_key -> text
  for (const json& j : read_artifact(cfg.out_dir / "mobility.jsonl")) {
    mobility[j.at("trajectory_key").get<std::string>()] =
        j.at("mobility_info").get<std::string>();
  }

  std::vector<PreparedPrompt> prompts;
  for (const json& j : read_artifact(cfg.out_dir / "chains.jsonl")) {
    const TrajectoryChain chain = chain_from_json(j);
    PreparedPrompt p;
    p.user_pseudo_id = chain.user_pseudo_id;
    p.date = chain.date;
    p.traj = trajectory_from_chain(chain);
    const std::string key = trajectory_key(chain.user_pseudo_id, chain.date);
    auto mit = mobility.find(key);
    if (mit == mobility.end()) {
      throw ParseError("mobility.jsonl has no entry for " + key);
    }
    p.bundle = render_prompt(tmpl, p.traj, mit->second, prompt_cfg);
    p.request.model_id = cfg.model_id;
    p.request.temperature = cfg.temperature;
    p.request.max_tokens = cfg.max_tokens;
    p.request.prompt = p.bundle.text;
    p.request_key = p.request.request_key();
    prompts.push_back(std::move(p));
  }
  return prompts;
}

inline ReportEntry make_report_entry(const PreparedPrompt& p, const std::string& response_text,
                                     const std::optional<std::string>& transport_error,
                                     const PromptConfig& prompt_cfg, int scenario_count) {
  ReportEntry entry;
  entry.user_pseudo_id = p.user_pseudo_id;
  entry.date = p.date;
  entry.request_key = p.request_key;
  entry.prompt_hash = p.bundle.content_hash;
  if (transport_error) {
    entry.error = *transport_error;
    return entry;
  }
  try {
    entry.result = parse_result(response_text, scenario_count);
    entry.validation = validate_result(*entry.result, p.traj, prompt_cfg);
  } catch (const ParseFailure& e) {
    entry.result.reset();
    entry.validation.reset();
    entry.error = e.what();
    entry.raw_text = e.raw_text;
  }
  return entry;
}

}  // namespace detail

/// infer: chains -> prompts -> responses -> parsed + validated report.
/// Writes prompts.jsonl, responses.jsonl, report.jsonl and
/// report.jsonl.summary.txt. Backend errors are recorded per trajectory;
/// the run continues.
inline void cmd_infer(const PipelineConfig& cfg, std::ostream& log) {
  detail::with_stage("cmd_infer", [&] {
    const std::vector<detail::PreparedPrompt> prompts = detail::prepare_prompts(cfg);
    const json meta = stage_meta(cfg, "infer");

    std::ostringstream prompt_lines;
    prompt_lines << json{{"_meta", meta}}.dump() << "\n";
    std::vector<LlmRequest> requests;
    for (const detail::PreparedPrompt& p : prompts) {
      prompt_lines << json{{"user_pseudo_id", p.user_pseudo_id},
                           {"date", to_string(p.date)},
                           {"request_key", p.request_key},
                           {"prompt_hash", p.bundle.content_hash},
                           {"prompt", p.bundle.text}}
                          .dump()
                   << "\n";
      requests.push_back(p.request);
    }
    write_text_file(cfg.out_dir / "prompts.jsonl", prompt_lines.str());

    Gateway gateway(cfg.backend);
    const std::vector<BatchItem> items = gateway.batch_infer(requests);

    PromptConfig prompt_cfg;
    prompt_cfg.occupational_categories = resolved_categories(cfg);
    prompt_cfg.scenario_count = cfg.scenario_count;

    std::ostringstream response_lines;
    response_lines << json{{"_meta", meta}}.dump() << "\n";
    std::vector<ReportEntry> entries;
    int ok = 0, failed = 0;
    for (size_t i = 0; i < items.size(); ++i) {
      const detail::PreparedPrompt& p = prompts[i];
      const BatchItem& item = items[i];
      json rec{{"user_pseudo_id", p.user_pseudo_id},
               {"date", to_string(p.date)},
               {"request_key", p.request_key},
               {"prompt_hash", p.bundle.content_hash}};
      if (item.error) {
        rec["status"] = "error";
        rec["error"] = *item.error;
        ++failed;
      } else {
        rec["status"] = "ok";
        rec["response"] = Gateway::response_to_json(*item.response);
        ++ok;
      }
      response_lines << rec.dump() << "\n";
      entries.push_back(detail::make_report_entry(p, item.error ? "" : item.response->text,
                                                  item.error, prompt_cfg, cfg.scenario_count));
    }
    write_text_file(cfg.out_dir / "responses.jsonl", response_lines.str());

    const std::string summary =
        emit_report(entries, report_path(cfg), stage_meta(cfg, "validate"));
    log << "cmd_infer: " << prompts.size() << " prompts, " << ok << " ok, " << failed
        << " failed (backend_calls=" << gateway.stats().backend_calls
        << " cache_hits=" << gateway.stats().cache_hits << ")\n";
    log << summary;
  });
}

/// validate: re-parses and re-validates existing responses.jsonl without
/// touching the backend. Rewrites report.jsonl + summary.
inline void cmd_validate(const PipelineConfig& cfg, std::ostream& log) {
  detail::with_stage("cmd_validate", [&] {
    const std::vector<detail::PreparedPrompt> prompts = detail::prepare_prompts(cfg);
    std::map<std::string, const detail::PreparedPrompt*> by_key;
    for (const detail::PreparedPrompt& p : prompts) by_key.emplace(p.request_key, &p);

    PromptConfig prompt_cfg;
    prompt_cfg.occupational_categories = resolved_categories(cfg);
    prompt_cfg.scenario_count = cfg.scenario_count;

    std::vector<ReportEntry> entries;
    for (const json& rec : detail::read_artifact(cfg.out_dir / "responses.jsonl")) {
      const std::string key = rec.at("request_key").get<std::string>();
      auto it = by_key.find(key);
      if (it == by_key.end()) {
        throw ParseError("responses.jsonl entry " + key + " has no matching chain");
      }
      std::optional<std::string> error;
      std::string text;
      if (rec.at("status").get<std::string>() == "error") {
        error = rec.at("error").get<std::string>();
      } else {
        text = Gateway::response_from_json(rec.at("response")).text;
      }
      entries.push_back(
          detail::make_report_entry(*it->second, text, error, prompt_cfg, cfg.scenario_count));
    }
    const std::string summary =
        emit_report(entries, report_path(cfg), stage_meta(cfg, "validate"));
    log << "cmd_validate: " << entries.size() << " responses\n" << summary;
  });
}

/// run: profile -> format -> infer, stopping at the first stage-level
/// fatal error. Stages communicate only via the out_dir files, so the
/// artifacts are byte-identical to running the stages individually.
inline void cmd_run(const PipelineConfig& cfg, std::ostream& log) {
  cmd_profile(cfg, log);
  cmd_format(cfg, log);
  cmd_infer(cfg, log);
}

}  // namespace trajsem
