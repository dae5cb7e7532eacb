#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trajsem/sampler.hpp"
#include "trajsem/trajectory.hpp"

namespace trajsem {

/// One slot of the spatio-temporal trajectory chain.
struct ChainRecord {
  int slot_index = 0;
  int weekday = 1;
  RegionId region_id = 0;
  RegionSample sample;
  std::optional<double> distance_from_prev_km;  // absent at slot 0
  bool unprofiled = false;                      // region had no POIs, no profile
};

struct TrajectoryChain {
  std::string user_pseudo_id;
  CivilDate date;
  std::vector<ChainRecord> records;
};

/// Builds the chain for one slotted trajectory. Each distinct region is
/// sampled once per trajectory and the sample is reused on repeat visits,
/// so one prompt never shows contradictory POI context for one place.
inline TrajectoryChain build_chain(const SlottedTrajectory& traj,
                                   const std::map<RegionId, GroupedWeights>& profiles,
                                   const SamplerConfig& config,
                                   const RegionRegistry& registry) {
  TrajectoryChain chain;
  chain.user_pseudo_id = traj.user_pseudo_id;
  chain.date = traj.date;
  const std::string key = trajectory_key(traj.user_pseudo_id, traj.date);

  std::map<RegionId, RegionSample> cache;
  for (size_t l = 0; l < traj.regions.size(); ++l) {
    ChainRecord rec;
    rec.slot_index = static_cast<int>(l);
    rec.weekday = traj.weekday;
    rec.region_id = traj.regions[l];
    auto pit = profiles.find(rec.region_id);
    if (pit == profiles.end()) {
      rec.unprofiled = true;
      rec.sample.region_id = rec.region_id;
    } else {
      auto cit = cache.find(rec.region_id);
      if (cit == cache.end()) {
        cit = cache.emplace(rec.region_id,
                            sample_region(pit->second, config, key, rec.region_id)).first;
      }
      rec.sample = cit->second;
    }
    if (l > 0) {
      const RegionId prev = traj.regions[l - 1];
      rec.distance_from_prev_km =
          prev == rec.region_id ? 0.0 : region_distance(prev, rec.region_id, registry);
    }
    chain.records.push_back(std::move(rec));
  }
  return chain;
}

namespace detail {

/// "A x2, B" with first-draw order kept and duplicates collapsed.
inline std::string render_group_draws(const std::vector<int>& draws,
                                      const CategoryTaxonomy& taxonomy) {
  if (draws.empty()) return "none";
  std::vector<std::pair<int, int>> collapsed;  // (category_id, multiplicity)
  for (int id : draws) {
    bool seen = false;
    for (auto& [cid, count] : collapsed) {
      if (cid == id) {
        ++count;
        seen = true;
        break;
      }
    }
    if (!seen) collapsed.emplace_back(id, 1);
  }
  std::string out;
  for (size_t i = 0; i < collapsed.size(); ++i) {
    if (i > 0) out += ", ";
    out += taxonomy.name_of(collapsed[i].first);
    if (collapsed[i].second > 1) out += " x" + std::to_string(collapsed[i].second);
  }
  return out;
}

}  // namespace detail

/// Renders the chain as the <mobility_info> text block: one line per
/// slot, byte-deterministic for a fixed seed. The committed golden file
/// is the normative example of this grammar.
inline std::string render_mobility_info(const TrajectoryChain& chain,
                                        const CategoryTaxonomy& taxonomy) {
  std::ostringstream out;
  for (const ChainRecord& rec : chain.records) {
    char head[64];
    std::snprintf(head, sizeof(head), "t=%02d wd=%d region=%lld", rec.slot_index, rec.weekday,
                  static_cast<long long>(rec.region_id));
    out << head;
    if (rec.unprofiled) {
      out << " | POIs: unprofiled";
    } else {
      for (FunctionGroup g : all_groups()) {
        out << " | " << group_name(g) << ": "
            << detail::render_group_draws(rec.sample.per_group[static_cast<size_t>(g)],
                                          taxonomy);
      }
    }
    if (rec.distance_from_prev_km) {
      out << " | dist_km=" << format_fixed(*rec.distance_from_prev_km, 2);
    }
    out << "\n";
  }
  return out.str();
}

// ---------------- persistence ----------------

inline json chain_to_json(const TrajectoryChain& chain) {
  json records = json::array();
  for (const ChainRecord& rec : chain.records) {
    json r{{"slot", rec.slot_index},
           {"weekday", rec.weekday},
           {"region_id", rec.region_id},
           {"unprofiled", rec.unprofiled}};
    if (!rec.unprofiled) {
      json sample = json::object();
      json empty = json::array();
      for (FunctionGroup g : all_groups()) {
        const size_t gi = static_cast<size_t>(g);
        sample[group_name(g)] = rec.sample.per_group[gi];
        if (rec.sample.group_empty[gi]) empty.push_back(group_name(g));
      }
      r["sample"] = std::move(sample);
      if (!empty.empty()) r["empty_groups"] = std::move(empty);
    }
    if (rec.distance_from_prev_km) r["distance_from_prev_km"] = *rec.distance_from_prev_km;
    records.push_back(std::move(r));
  }
  return json{{"user_pseudo_id", chain.user_pseudo_id},
              {"date", to_string(chain.date)},
              {"records", std::move(records)}};
}

inline TrajectoryChain chain_from_json(const json& j) {
  TrajectoryChain chain;
  chain.user_pseudo_id = j.at("user_pseudo_id").get<std::string>();
  chain.date = parse_civil_date(j.at("date").get<std::string>());
  for (const json& r : j.at("records")) {
    ChainRecord rec;
    rec.slot_index = r.at("slot").get<int>();
    rec.weekday = r.at("weekday").get<int>();
    rec.region_id = r.at("region_id").get<RegionId>();
    rec.unprofiled = r.value("unprofiled", false);
    rec.sample.region_id = rec.region_id;
    if (r.contains("sample")) {
      for (FunctionGroup g : all_groups()) {
        const size_t gi = static_cast<size_t>(g);
        rec.sample.per_group[gi] = r["sample"].at(group_name(g)).get<std::vector<int>>();
        rec.sample.flat.insert(rec.sample.flat.end(), rec.sample.per_group[gi].begin(),
                               rec.sample.per_group[gi].end());
      }
      if (r.contains("empty_groups")) {
        for (const json& g : r["empty_groups"]) {
          rec.sample.group_empty[static_cast<size_t>(parse_group(g.get<std::string>()))] = true;
        }
      }
    }
    if (r.contains("distance_from_prev_km")) {
      rec.distance_from_prev_km = r["distance_from_prev_km"].get<double>();
    }
    chain.records.push_back(std::move(rec));
  }
  return chain;
}

}  // namespace trajsem
