#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trajsem/geo.hpp"

namespace trajsem {

/// Per-region TF-IDF weight vector over all M POI categories.
struct RegionProfile {
  RegionId region_id = 0;
  std::vector<double> weights;
};

struct WeightedCategory {
  int category_id = 0;
  double weight = 0.0;
};

/// A region's profile partitioned by function group. Every taxonomy
/// category appears exactly once, in its group, ascending by id.
struct GroupedWeights {
  RegionId region_id = 0;
  std::array<std::vector<WeightedCategory>, kGroupCount> per_group;

  const std::vector<WeightedCategory>& group(FunctionGroup g) const {
    return per_group[static_cast<size_t>(g)];
  }
};

/// q_i = number of regions whose histogram has a positive count for
/// category i. Expects one histogram per region, R total.
inline std::vector<std::int64_t> compute_document_frequency(
    const std::map<RegionId, PoiHistogram>& histograms, int region_count) {
  if (region_count < 1 || static_cast<size_t>(region_count) != histograms.size()) {
    throw ConfigError("document frequency: region_count must match the histogram map size");
  }
  size_t m = 0;
  for (const auto& [id, h] : histograms) {
    m = h.counts.size();
    break;
  }
  std::vector<std::int64_t> q(m, 0);
  for (const auto& [id, h] : histograms) {
    if (h.counts.size() != m) throw ConfigError("document frequency: ragged histograms");
    for (size_t i = 0; i < m; ++i) {
      if (h.counts[i] > 0) q[i] += 1;
    }
  }
  return q;
}

/// TF-IDF weights for one region:
///   w_i = (n_i / N_r) * ln(R / q_i),  with w_i = 0 whenever n_i = 0.
/// Natural log. A category present in every region gets weight 0.
inline RegionProfile compute_tfidf(RegionId region_id, const PoiHistogram& histogram,
                                   const std::vector<std::int64_t>& document_frequency,
                                   int region_count) {
  if (histogram.total == 0) {
    throw EmptyRegion("region " + std::to_string(region_id) + " has no POIs");
  }
  if (histogram.counts.size() != document_frequency.size()) {
    throw ConfigError("tfidf: histogram and document frequency sizes differ");
  }
  RegionProfile profile;
  profile.region_id = region_id;
  profile.weights.assign(histogram.counts.size(), 0.0);
  const double nr = static_cast<double>(histogram.total);
  for (size_t i = 0; i < histogram.counts.size(); ++i) {
    const std::int64_t n = histogram.counts[i];
    if (n == 0) continue;  // convention: zero weight, q_i = 0 never reaches the log
    const double tf = static_cast<double>(n) / nr;
    const double idf = std::log(static_cast<double>(region_count) /
                                static_cast<double>(document_frequency[i]));
    profile.weights[i] = tf * idf;
  }
  return profile;
}

/// Partitions a profile into the five per-group weight vectors.
inline GroupedWeights group_weights(const RegionProfile& profile,
                                    const CategoryTaxonomy& taxonomy) {
  if (profile.weights.size() != static_cast<size_t>(taxonomy.size())) {
    throw ConfigError("group_weights: profile length does not match taxonomy size");
  }
  GroupedWeights grouped;
  grouped.region_id = profile.region_id;
  for (int i = 0; i < taxonomy.size(); ++i) {
    const size_t g = static_cast<size_t>(taxonomy.group_of(i));
    grouped.per_group[g].push_back(WeightedCategory{i, profile.weights[static_cast<size_t>(i)]});
  }
  return grouped;
}

// ---------------- persistence ----------------

/// One profile as a JSON-lines record; zero weights omitted.
inline json profile_to_json(const RegionProfile& profile) {
  json weights = json::array();
  for (size_t i = 0; i < profile.weights.size(); ++i) {
    if (profile.weights[i] != 0.0) {
      weights.push_back(json{{"category_id", static_cast<int>(i)}, {"w", profile.weights[i]}});
    }
  }
  return json{{"region_id", profile.region_id}, {"weights", std::move(weights)}};
}

inline RegionProfile profile_from_json(const json& j, int category_count) {
  RegionProfile profile;
  profile.region_id = j.at("region_id").get<RegionId>();
  profile.weights.assign(static_cast<size_t>(category_count), 0.0);
  for (const json& w : j.at("weights")) {
    const int cid = w.at("category_id").get<int>();
    if (cid < 0 || cid >= category_count) {
      throw ParseError("profile for region " + std::to_string(profile.region_id) +
                       ": category id " + std::to_string(cid) + " outside taxonomy");
    }
    profile.weights[static_cast<size_t>(cid)] = w.at("w").get<double>();
  }
  return profile;
}

}  // namespace trajsem
