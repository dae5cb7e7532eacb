#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trajsem/prompt.hpp"
#include "trajsem/trajectory.hpp"

namespace trajsem {

struct InferenceScenario {
  std::string label;  // "A", "B", ...
  std::string occupational_category;
  std::vector<std::string> activity_sequence;
  std::string trajectory_description;
};

struct InferenceResult {
  std::vector<InferenceScenario> scenarios;
  std::string raw_text;  // LLM output byte-exact, kept regardless of outcome
  std::string prompt_hash;
  std::vector<std::string> parse_warnings;
};

// ---------------- parsing ----------------

namespace detail {

/// Strips markdown decoration from line edges: heading marks, bold and
/// emphasis runs, blockquote markers.
inline std::string strip_decoration(std::string_view line) {
  size_t b = 0, e = line.size();
  auto is_deco = [](char c) {
    return c == '#' || c == '*' || c == '_' || c == '>' || c == '`' ||
           std::isspace(static_cast<unsigned char>(c));
  };
  while (b < e && is_deco(line[b])) ++b;
  while (e > b && is_deco(line[e - 1])) --e;
  return std::string(line.substr(b, e - b));
}

inline std::string strip_value_decoration(std::string_view value) {
  size_t b = 0, e = value.size();
  auto is_deco = [](char c) {
    return c == '*' || c == '_' || c == '`' || std::isspace(static_cast<unsigned char>(c));
  };
  while (b < e && is_deco(value[b])) ++b;
  while (e > b && is_deco(value[e - 1])) --e;
  return std::string(value.substr(b, e - b));
}

/// Case-insensitive normalization to the five canonical activity labels;
/// anything else comes back verbatim for validation to flag.
inline std::string normalize_activity_label(std::string_view raw) {
  const std::string cleaned = strip_value_decoration(raw);
  for (const std::string& canonical : activity_type_labels()) {
    if (iequals(cleaned, canonical)) return canonical;
  }
  return cleaned;
}

inline std::vector<std::string> split_activity_list(const std::string& list_text) {
  std::vector<std::string> labels;
  std::string cur;
  for (char c : list_text) {
    if (c == ',') {
      const std::string label = normalize_activity_label(cur);
      if (!label.empty()) labels.push_back(label);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  const std::string label = normalize_activity_label(cur);
  if (!label.empty()) labels.push_back(label);
  return labels;
}

}  // namespace detail

/// Parses raw LLM text against the requested result grammar:
///   Result <label>:
///   Occupational Category: ...
///   Activity Sequence: [...]
///   Trajectory Description: ...
/// Lexing is tolerant: markdown decoration, case variation and
/// surrounding prose are fine. Zero recognizable scenarios is a
/// ParseFailure; fewer than expected is a warning.
inline InferenceResult parse_result(const std::string& text, int expected_scenarios = 3) {
  if (text.empty()) throw ParseFailure("empty LLM output", text);

  static const std::regex header_re(R"(^result\s+([A-Za-z0-9]+)\s*[:.]?$)",
                                    std::regex::icase);
  static const std::regex category_re(R"(^occupational\s+category\s*[*_`]*\s*:\s*(.*)$)",
                                      std::regex::icase);
  static const std::regex sequence_re(R"(^activity\s+sequence\s*[*_`]*\s*:\s*(.*)$)",
                                      std::regex::icase);
  static const std::regex description_re(R"(^trajectory\s+description\s*[*_`]*\s*:\s*(.*)$)",
                                         std::regex::icase);

  InferenceResult result;
  result.raw_text = text;

  struct Partial {
    InferenceScenario scenario;
    bool has_category = false, has_sequence = false, has_description = false;
    bool in_description = false;
  };
  std::optional<Partial> current;

  auto finish = [&](std::optional<Partial>& p) {
    if (!p) return;
    const int fields = static_cast<int>(p->has_category) + static_cast<int>(p->has_sequence) +
                       static_cast<int>(p->has_description);
    if (fields == 0) {
      result.parse_warnings.push_back("scenario " + p->scenario.label +
                                      ": header with no recognizable fields, dropped");
    } else {
      if (!p->has_category)
        result.parse_warnings.push_back("scenario " + p->scenario.label +
                                        ": missing occupational category");
      if (!p->has_sequence)
        result.parse_warnings.push_back("scenario " + p->scenario.label +
                                        ": missing activity sequence");
      if (!p->has_description)
        result.parse_warnings.push_back("scenario " + p->scenario.label +
                                        ": missing trajectory description");
      while (!p->scenario.trajectory_description.empty() &&
             p->scenario.trajectory_description.back() == '\n') {
        p->scenario.trajectory_description.pop_back();
      }
      result.scenarios.push_back(std::move(p->scenario));
    }
    p.reset();
  };

  std::istringstream in(text);
  std::string line;
  bool collecting_sequence = false;
  std::string sequence_buf;

  auto close_sequence = [&]() {
    if (!current || !collecting_sequence) return;
    const size_t open = sequence_buf.find('[');
    const size_t close = sequence_buf.rfind(']');
    std::string inner = sequence_buf;
    if (open != std::string::npos) {
      inner = close != std::string::npos && close > open
                  ? sequence_buf.substr(open + 1, close - open - 1)
                  : sequence_buf.substr(open + 1);
    }
    current->scenario.activity_sequence = detail::split_activity_list(inner);
    current->has_sequence = true;
    collecting_sequence = false;
    sequence_buf.clear();
  };

  while (std::getline(in, line)) {
    const std::string stripped = detail::strip_decoration(line);
    std::smatch m;
    if (std::regex_match(stripped, m, header_re)) {
      close_sequence();
      finish(current);
      current = Partial{};
      // Normalize label case so "Result a" and "Result A" agree.
      std::string label = m[1].str();
      for (char& c : label) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      current->scenario.label = label;
      continue;
    }
    if (!current) continue;  // surrounding prose before the first header
    if (std::regex_match(stripped, m, category_re)) {
      close_sequence();
      current->scenario.occupational_category = detail::strip_value_decoration(m[1].str());
      current->has_category = true;
      current->in_description = false;
      continue;
    }
    if (std::regex_match(stripped, m, sequence_re)) {
      close_sequence();
      current->in_description = false;
      sequence_buf = m[1].str();
      collecting_sequence = true;
      if (sequence_buf.find('[') == std::string::npos ||
          sequence_buf.find(']') != std::string::npos) {
        close_sequence();
      }
      continue;
    }
    if (std::regex_match(stripped, m, description_re)) {
      close_sequence();
      current->scenario.trajectory_description = trim(m[1].str());
      current->has_description = true;
      current->in_description = true;
      continue;
    }
    if (collecting_sequence) {
      sequence_buf += " " + line;
      if (line.find(']') != std::string::npos) close_sequence();
      continue;
    }
    if (current->in_description) {
      if (!current->scenario.trajectory_description.empty()) {
        current->scenario.trajectory_description += "\n";
      }
      current->scenario.trajectory_description += line;
    }
  }
  close_sequence();
  finish(current);

  if (result.scenarios.empty()) {
    throw ParseFailure("no recognizable scenarios in LLM output", text);
  }
  if (static_cast<int>(result.scenarios.size()) != expected_scenarios) {
    result.parse_warnings.push_back("expected " + std::to_string(expected_scenarios) +
                                    " scenarios, found " +
                                    std::to_string(result.scenarios.size()));
  }
  return result;
}

// ---------------- validation ----------------

struct ValidationChecks {
  std::string label;
  bool category_in_list = true;       // warn-only
  bool sequence_length_ok = true;
  bool labels_ok = true;
  bool region_consistency_ok = true;  // warn-only heuristic
};

enum class ValidationOverall { pass, warn, fail };

inline const char* to_string(ValidationOverall v) {
  switch (v) {
    case ValidationOverall::pass: return "pass";
    case ValidationOverall::warn: return "warn";
    case ValidationOverall::fail: return "fail";
  }
  return "fail";
}

struct ValidationReport {
  std::vector<ValidationChecks> per_scenario;
  ValidationOverall overall = ValidationOverall::pass;
};

/// Structural checks per scenario. Length or label violations fail the
/// report; an unlisted occupational category or an incoherent
/// region-to-activity mapping (more than 2 distinct labels for one
/// region) only warns.
inline ValidationReport validate_result(const InferenceResult& result,
                                        const SlottedTrajectory& traj,
                                        const PromptConfig& config) {
  ValidationReport report;
  bool any_fail = false, any_warn = false;
  for (const InferenceScenario& scenario : result.scenarios) {
    ValidationChecks checks;
    checks.label = scenario.label;

    checks.sequence_length_ok = scenario.activity_sequence.size() == traj.regions.size();

    for (const std::string& label : scenario.activity_sequence) {
      bool known = false;
      for (const std::string& canonical : activity_type_labels()) {
        if (label == canonical) {
          known = true;
          break;
        }
      }
      if (!known) {
        checks.labels_ok = false;
        break;
      }
    }

    checks.category_in_list = false;
    for (const std::string& cat : config.occupational_categories) {
      if (iequals(cat, scenario.occupational_category)) {
        checks.category_in_list = true;
        break;
      }
    }

    std::map<RegionId, std::set<std::string>> labels_per_region;
    const size_t n = std::min(scenario.activity_sequence.size(), traj.regions.size());
    for (size_t l = 0; l < n; ++l) {
      labels_per_region[traj.regions[l]].insert(scenario.activity_sequence[l]);
    }
    for (const auto& [region, labels] : labels_per_region) {
      if (labels.size() > 2) {
        checks.region_consistency_ok = false;
        break;
      }
    }

    any_fail = any_fail || !checks.sequence_length_ok || !checks.labels_ok;
    any_warn = any_warn || !checks.category_in_list || !checks.region_consistency_ok;
    report.per_scenario.push_back(std::move(checks));
  }
  report.overall = any_fail ? ValidationOverall::fail
                            : (any_warn ? ValidationOverall::warn : ValidationOverall::pass);
  return report;
}

// ---------------- report ----------------

struct ReportEntry {
  std::string user_pseudo_id;
  CivilDate date;
  std::string request_key;
  std::string prompt_hash;
  std::optional<InferenceResult> result;       // absent on backend/parse error
  std::optional<ValidationReport> validation;  // absent when result is absent
  std::string error;                           // nonempty on failure
  std::string raw_text;                        // unparseable LLM output, kept for inspection
};

inline json validation_to_json(const ValidationReport& report) {
  json per = json::array();
  for (const ValidationChecks& c : report.per_scenario) {
    per.push_back(json{{"label", c.label},
                       {"category_in_list", c.category_in_list},
                       {"sequence_length_ok", c.sequence_length_ok},
                       {"labels_ok", c.labels_ok},
                       {"region_consistency_ok", c.region_consistency_ok}});
  }
  return json{{"overall", to_string(report.overall)}, {"per_scenario", std::move(per)}};
}

inline json scenario_to_json(const InferenceScenario& s) {
  return json{{"label", s.label},
              {"occupational_category", s.occupational_category},
              {"activity_sequence", s.activity_sequence},
              {"trajectory_description", s.trajectory_description}};
}

/// Writes the JSON-lines report plus a human-readable summary next to it
/// (<path>.summary.txt). Returns the summary text.
inline std::string emit_report(const std::vector<ReportEntry>& entries,
                               const std::filesystem::path& path, const json& meta) {
  std::ostringstream lines;
  lines << json{{"_meta", meta}}.dump() << "\n";

  int pass = 0, warn = 0, fail = 0, errors = 0;
  std::map<std::string, std::int64_t> label_freq;
  for (const ReportEntry& e : entries) {
    json rec{{"user_pseudo_id", e.user_pseudo_id},
             {"date", to_string(e.date)},
             {"request_key", e.request_key},
             {"prompt_hash", e.prompt_hash}};
    if (!e.error.empty()) {
      ++errors;
      rec["status"] = "error";
      rec["error"] = e.error;
      if (!e.raw_text.empty()) rec["raw_text"] = e.raw_text;
    } else {
      rec["status"] = "ok";
      json scenarios = json::array();
      if (e.result) {
        for (const InferenceScenario& s : e.result->scenarios) {
          scenarios.push_back(scenario_to_json(s));
          for (const std::string& label : s.activity_sequence) label_freq[label] += 1;
        }
        if (!e.result->parse_warnings.empty()) rec["parse_warnings"] = e.result->parse_warnings;
      }
      rec["scenarios"] = std::move(scenarios);
      if (e.validation) {
        rec["validation"] = validation_to_json(*e.validation);
        switch (e.validation->overall) {
          case ValidationOverall::pass: ++pass; break;
          case ValidationOverall::warn: ++warn; break;
          case ValidationOverall::fail: ++fail; break;
        }
      }
    }
    lines << rec.dump() << "\n";
  }
  write_text_file(path, lines.str());

  std::ostringstream summary;
  summary << "trajectories: " << entries.size() << " (pass " << pass << ", warn " << warn
          << ", fail " << fail << ", error " << errors << ")\n";
  summary << "activity label frequency:\n";
  std::vector<std::pair<std::string, std::int64_t>> freq(label_freq.begin(), label_freq.end());
  std::sort(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (const auto& [label, count] : freq) {
    summary << "  " << label << ": " << count << "\n";
  }
  std::filesystem::path summary_path = path;
  summary_path += ".summary.txt";
  write_text_file(summary_path,
                  "# config=" + meta.value("config_hash", std::string("-")) +
                      " template=" + meta.value("template_hash", std::string("-")) + "\n" +
                      summary.str());
  return summary.str();
}

}  // namespace trajsem
