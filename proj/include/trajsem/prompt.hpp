#pragma once

#include <array>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trajsem/trajectory.hpp"
#include "trajsem/util.hpp"

namespace trajsem {

// ---------------- template ----------------

/// The four prompt sections, in the order they must appear.
inline const std::array<std::string, 4>& prompt_section_names() {
  static const std::array<std::string, 4> names = {"aims", "data_description", "cot_reasoning",
                                                   "output_guidance"};
  return names;
}

/// Placeholders a template body may use, {{name}} spelled.
inline const std::set<std::string>& declared_placeholders() {
  static const std::set<std::string> names = {"trajectory_seq",        "mobility_info",
                                              "occupational_category", "activity_type",
                                              "scenario_count",        "sequence_length"};
  return names;
}

struct PromptTemplate {
  struct Section {
    std::string name;
    std::string body;
    friend bool operator==(const Section&, const Section&) = default;
  };
  std::vector<Section> sections;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

namespace detail {

inline std::string strip_blank_edges(const std::vector<std::string>& lines) {
  size_t b = 0, e = lines.size();
  while (b < e && trim(lines[b]).empty()) ++b;
  while (e > b && trim(lines[e - 1]).empty()) --e;
  std::string out;
  for (size_t i = b; i < e; ++i) {
    if (i > b) out += "\n";
    out += lines[i];
  }
  return out;
}

inline void validate_placeholders(const PromptTemplate& tmpl) {
  static const std::regex token(R"(\{\{([A-Za-z0-9_]+)\}\})");
  for (const auto& section : tmpl.sections) {
    auto begin = std::sregex_iterator(section.body.begin(), section.body.end(), token);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      const std::string name = (*it)[1].str();
      if (!declared_placeholders().count(name)) {
        throw ParseError("template section \"" + section.name +
                         "\" uses undeclared placeholder: " + name);
      }
    }
  }
}

}  // namespace detail

/// Parses the sectioned template format: `[section: name]` headers with
/// free-text bodies. All four sections must be present once, in order,
/// and bodies may only use declared placeholders.
inline PromptTemplate parse_template(const std::string& text) {
  static const std::regex header(R"(^\s*\[section:\s*([A-Za-z_]+)\s*\]\s*$)");
  PromptTemplate tmpl;
  std::istringstream in(text);
  std::string line;
  std::string current;
  std::vector<std::string> body;
  auto flush = [&]() {
    if (!current.empty()) {
      tmpl.sections.push_back({current, detail::strip_blank_edges(body)});
    }
    body.clear();
  };
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, header)) {
      flush();
      current = m[1].str();
    } else if (current.empty()) {
      if (!trim(line).empty()) {
        throw ParseError("template: content before the first [section: ...] header");
      }
    } else {
      body.push_back(line);
    }
  }
  flush();

  const auto& expected = prompt_section_names();
  std::set<std::string> have;
  for (const auto& s : tmpl.sections) {
    if (!have.insert(s.name).second) {
      throw ParseError("template: duplicate section \"" + s.name + "\"");
    }
  }
  for (const auto& name : expected) {
    if (!have.count(name)) throw ParseError("template: missing section \"" + name + "\"");
  }
  for (const auto& s : tmpl.sections) {
    if (std::find(expected.begin(), expected.end(), s.name) == expected.end()) {
      throw ParseError("template: unknown section \"" + s.name + "\"");
    }
  }
  for (size_t i = 0; i < expected.size(); ++i) {
    if (tmpl.sections[i].name != expected[i]) {
      throw ParseError("template: section \"" + tmpl.sections[i].name +
                       "\" out of order, expected \"" + expected[i] + "\"");
    }
  }
  detail::validate_placeholders(tmpl);
  return tmpl;
}

inline PromptTemplate load_template(const std::filesystem::path& path) {
  try {
    return parse_template(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline std::string serialize_template(const PromptTemplate& tmpl) {
  std::string out;
  for (const auto& section : tmpl.sections) {
    out += "[section: " + section.name + "]\n";
    out += section.body;
    out += "\n\n";
  }
  return out;
}

// ---------------- config ----------------

inline std::vector<std::string> default_occupational_categories() {
  return {"Office worker",     "Student",        "Teacher",    "Retail/Service worker",
          "Healthcare worker", "Driver/Courier", "Freelancer", "Retiree/Homemaker"};
}

inline const std::array<std::string, kGroupCount>& activity_type_labels() {
  static const std::array<std::string, kGroupCount> labels = {"Home", "Work", "School",
                                                              "Leisure", "Other"};
  return labels;
}

struct PromptConfig {
  std::vector<std::string> occupational_categories = default_occupational_categories();
  int scenario_count = 3;
};

// ---------------- rendering ----------------

struct PromptBundle {
  std::string text;
  std::string trajectory_seq;
  std::string mobility_info;
  json config_snapshot;
  std::string content_hash;  // sha256 of text
};

/// "[161, 161, 359]" style region-id list.
inline std::string format_trajectory_seq(const std::vector<RegionId>& regions) {
  std::string out = "[";
  for (size_t i = 0; i < regions.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(regions[i]);
  }
  out += "]";
  return out;
}

/// Substitutes all placeholders and joins the section bodies. Rendering
/// is pure: the same inputs give the same text and content hash.
inline PromptBundle render_prompt(const PromptTemplate& tmpl, const SlottedTrajectory& traj,
                                  const std::string& mobility_info,
                                  const PromptConfig& config) {
  if (config.occupational_categories.empty()) {
    throw ConfigError("prompt config: occupational category list is empty");
  }
  {
    std::set<std::string> unique(config.occupational_categories.begin(),
                                 config.occupational_categories.end());
    if (unique.size() != config.occupational_categories.size()) {
      throw ConfigError("prompt config: occupational categories must be unique");
    }
  }
  if (config.scenario_count < 1) {
    throw ConfigError("prompt config: scenario_count must be >= 1");
  }
  if (mobility_info.empty()) {
    throw ConfigError("render_prompt: mobility_info is empty");
  }

  auto join = [](const auto& items) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
      if (i > 0) out += ", ";
      out += items[i];
    }
    return out;
  };

  PromptBundle bundle;
  bundle.trajectory_seq = format_trajectory_seq(traj.regions);
  bundle.mobility_info = mobility_info;
  const std::map<std::string, std::string> values = {
      {"trajectory_seq", bundle.trajectory_seq},
      {"mobility_info", mobility_info},
      {"occupational_category", join(config.occupational_categories)},
      {"activity_type", join(activity_type_labels())},
      {"scenario_count", std::to_string(config.scenario_count)},
      {"sequence_length", std::to_string(traj.regions.size())},
  };

  std::string text;
  for (size_t i = 0; i < tmpl.sections.size(); ++i) {
    if (i > 0) text += "\n\n";
    std::string body = tmpl.sections[i].body;
    for (const auto& [name, value] : values) {
      const std::string token = "{{" + name + "}}";
      size_t pos = 0;
      while ((pos = body.find(token, pos)) != std::string::npos) {
        body.replace(pos, token.size(), value);
        pos += value.size();
      }
    }
    text += body;
  }
  text += "\n";

  static const std::regex leftover(R"(\{\{[A-Za-z0-9_]+\}\})");
  std::smatch m;
  if (std::regex_search(text, m, leftover)) {
    throw ConfigError("render_prompt: unresolved placeholder " + m[0].str());
  }

  bundle.text = text;
  bundle.config_snapshot = json{{"occupational_categories", config.occupational_categories},
                                {"activity_types", activity_type_labels()},
                                {"scenario_count", config.scenario_count}};
  bundle.content_hash = sha256_hex(text);
  return bundle;
}

// ---------------- default template ----------------

inline const std::string& default_template_text() {
  static const std::string text = R"TMPL([section: aims]
You are an analyst of urban human mobility. Below is one day of movement data for a single anonymous individual. Complete three tasks:
1. Occupational Category Selection: identify the individual's most likely occupation.
2. Activity Sequence Inference: infer the activity performed in each time slot.
3. Trajectory Description: narrate the day's movements, explaining the purpose and context of each segment.
The data comes from mobile phone location records aggregated to city regions; region numbers identify neighborhoods, and the point-of-interest categories found in a region hint at what people do there.
Trajectory sequence: {{trajectory_seq}}
Mobility information:
{{mobility_info}}

[section: data_description]
The trajectory sequence lists the ID of the region where the individual spent the majority of each of the {{sequence_length}} equal time slots of the day, in chronological order.
The mobility information is one line per time slot with these fields: t is the stay time interval index within the day, wd is the day of week (1=Monday ... 7=Sunday), region is the region ID, and the Home, Work, School, Leisure and Other fields list point-of-interest categories sampled from that region's profile for each function group ("none" means that group has no categories there; a suffix like "x2" marks a category drawn more than once). dist_km is the travel distance in kilometers from the previous slot's region; the first line has none.

[section: cot_reasoning]
Reason step by step:
Step 1. Choose the individual's occupation from these occupational categories: {{occupational_category}}. Base the choice on the movement pattern: when they leave and return, how far they travel, and what kinds of places they visit.
Step 2. Given that occupation, narrow down the activities it makes plausible, then assign each time slot one activity type from: {{activity_type}}. Use the slot's region, its sampled POI categories, the time of day, and the day of week.
Step 3. Using the chosen occupation and the inferred activity sequence, describe the whole trajectory: explain the behavior pattern at specific times and places and the reason for each change of location.

[section: output_guidance]
A single trajectory can plausibly describe several different lives, so infer the {{scenario_count}} most likely scenarios and label them Result A, Result B, and so on. Emphasize key time points, active areas, and moving distances. Clarify the purpose of the activities in each stay region based on its main POI type.
Format every scenario exactly like this, with no extra markup:
Result <label>:
Occupational Category: <one category>
Activity Sequence: [<exactly {{sequence_length}} comma-separated activity types>]
Trajectory Description: <free-text narrative>
)TMPL";
  return text;
}

inline PromptTemplate default_template() { return parse_template(default_template_text()); }

}  // namespace trajsem
