#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "trajsem/geo.hpp"
#include "trajsem/timeutil.hpp"
#include "trajsem/util.hpp"

namespace trajsem {

/// One interval the user spent at one region.
struct StayRecord {
  std::string user_pseudo_id;
  RegionId region_id = 0;
  LocalTimestamp start;
  LocalTimestamp end;  // exclusive; start < end
};

/// One user-day reduced to L equal time slots. regions[l] is where the
/// user spent the majority of slot l; coverage[l] counts the observed
/// minutes in that slot before any gap filling.
struct SlottedTrajectory {
  std::string user_pseudo_id;
  CivilDate date;
  int weekday = 1;  // 1 = Monday ... 7 = Sunday
  std::vector<RegionId> regions;
  std::vector<int> coverage_minutes;
};

/// Stable trajectory identity, also the PRNG stream key for sampling.
inline std::string trajectory_key(const std::string& user_pseudo_id, const CivilDate& date) {
  return user_pseudo_id + "|" + to_string(date);
}

/// Slots one user-day. Per slot the region with the largest dwell wins;
/// ties go to the earlier stay start, then the lower region_id. Slots
/// without coverage carry the previous slot's region forward; leading
/// gaps are backfilled with the first observed region.
///
/// L must divide the day into whole minutes (1440 % L == 0).
inline SlottedTrajectory slot_trajectory(const std::vector<StayRecord>& stays,
                                         const CivilDate& date, int slots_per_day) {
  if (slots_per_day < 1 || kMinutesPerDay % slots_per_day != 0) {
    throw ConfigError("slot count " + std::to_string(slots_per_day) +
                      " does not divide a day into whole minutes");
  }
  const int slot_len = kMinutesPerDay / slots_per_day;
  const std::int64_t day_start = days_from_civil(date) * kMinutesPerDay;
  const std::int64_t day_end = day_start + kMinutesPerDay;

  // Normalize input order so slotting is permutation invariant.
  std::vector<StayRecord> sorted = stays;
  std::sort(sorted.begin(), sorted.end(), [](const StayRecord& a, const StayRecord& b) {
    if (a.start.local_minutes != b.start.local_minutes)
      return a.start.local_minutes < b.start.local_minutes;
    if (a.end.local_minutes != b.end.local_minutes)
      return a.end.local_minutes < b.end.local_minutes;
    return a.region_id < b.region_id;
  });

  struct Contender {
    std::int64_t dwell = 0;
    std::int64_t earliest_start = 0;
  };

  SlottedTrajectory traj;
  traj.date = date;
  traj.weekday = weekday_mon1(date);
  traj.regions.assign(static_cast<size_t>(slots_per_day), 0);
  traj.coverage_minutes.assign(static_cast<size_t>(slots_per_day), 0);
  std::vector<bool> observed(static_cast<size_t>(slots_per_day), false);

  for (const StayRecord& stay : sorted) {
    if (traj.user_pseudo_id.empty()) {
      traj.user_pseudo_id = stay.user_pseudo_id;
    } else if (stay.user_pseudo_id != traj.user_pseudo_id) {
      throw ConfigError("slot_trajectory: stays belong to more than one user");
    }
  }

  bool any_overlap = false;
  for (int l = 0; l < slots_per_day; ++l) {
    const std::int64_t slot_a = day_start + static_cast<std::int64_t>(l) * slot_len;
    const std::int64_t slot_b = slot_a + slot_len;
    std::map<RegionId, Contender> contenders;
    std::vector<std::pair<std::int64_t, std::int64_t>> covered;
    for (const StayRecord& stay : sorted) {
      const std::int64_t a = std::max(stay.start.local_minutes, slot_a);
      const std::int64_t b = std::min(stay.end.local_minutes, slot_b);
      if (a >= b) continue;
      auto [it, inserted] = contenders.try_emplace(stay.region_id);
      it->second.dwell += b - a;
      if (inserted || stay.start.local_minutes < it->second.earliest_start) {
        it->second.earliest_start = stay.start.local_minutes;
      }
      covered.emplace_back(a, b);
    }
    if (contenders.empty()) continue;
    any_overlap = true;
    observed[static_cast<size_t>(l)] = true;

    RegionId winner = 0;
    Contender best;
    bool first = true;
    for (const auto& [region, c] : contenders) {
      const bool wins = first || c.dwell > best.dwell ||
                        (c.dwell == best.dwell && c.earliest_start < best.earliest_start);
      // map order is ascending region_id, so equal (dwell, start) keeps
      // the lower id
      if (wins) {
        winner = region;
        best = c;
        first = false;
      }
    }
    traj.regions[static_cast<size_t>(l)] = winner;

    // Coverage is the union of stay intervals inside the slot.
    std::sort(covered.begin(), covered.end());
    std::int64_t cov = 0, reach = slot_a;
    for (const auto& [a, b] : covered) {
      if (b <= reach) continue;
      cov += b - std::max(a, reach);
      reach = b;
    }
    traj.coverage_minutes[static_cast<size_t>(l)] = static_cast<int>(cov);
  }

  if (!any_overlap) {
    throw EmptyDay("no stay overlaps " + to_string(date));
  }

  // Gap fill: carry forward, then backfill leading slots.
  RegionId first_observed = 0;
  for (int l = 0; l < slots_per_day; ++l) {
    if (observed[static_cast<size_t>(l)]) {
      first_observed = traj.regions[static_cast<size_t>(l)];
      break;
    }
  }
  RegionId carry = first_observed;
  for (int l = 0; l < slots_per_day; ++l) {
    if (observed[static_cast<size_t>(l)]) {
      carry = traj.regions[static_cast<size_t>(l)];
    } else {
      traj.regions[static_cast<size_t>(l)] = carry;
    }
  }
  return traj;
}

// ---------------- quality gate ----------------

struct ValidationOutcome {
  bool accepted = true;
  std::string reason;
};

/// Rejects user-days whose observed coverage falls below the fraction.
inline ValidationOutcome validate_trajectory(const SlottedTrajectory& traj,
                                             double min_coverage_fraction) {
  std::int64_t observed = 0;
  for (int c : traj.coverage_minutes) observed += c;
  const double fraction = static_cast<double>(observed) / kMinutesPerDay;
  if (fraction < min_coverage_fraction) {
    return ValidationOutcome{false, "coverage " + format_fixed(fraction, 3) + " < " +
                                        json(min_coverage_fraction).dump()};
  }
  return ValidationOutcome{true, ""};
}

// ---------------- stay input ----------------

/// Reads stays from CSV (header user_pseudo_id,region_id,start_iso8601,
/// end_iso8601) or JSON lines with the same keys; picked by extension,
/// .csv vs anything else.
inline std::vector<StayRecord> load_stays(const std::filesystem::path& path) {
  std::vector<StayRecord> stays;
  auto make_stay = [&](const std::string& user, RegionId region, const std::string& start,
                       const std::string& end, const std::string& where) {
    StayRecord s;
    s.user_pseudo_id = user;
    s.region_id = region;
    s.start = parse_iso8601_minutes(start);
    s.end = parse_iso8601_minutes(end);
    if (s.start.local_minutes >= s.end.local_minutes) {
      throw ParseError(where + ": stay start is not before end");
    }
    stays.push_back(std::move(s));
  };

  if (iequals(path.extension().string(), ".csv")) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stays file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("stays file is empty: " + path.string());
    size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(lineno);
      auto fields = split_csv_line(line);
      if (fields.size() != 4) throw ParseError(where + ": expected 4 fields");
      char* endp = nullptr;
      const RegionId region = std::strtoll(fields[1].c_str(), &endp, 10);
      if (endp == fields[1].c_str() || *endp != '\0') {
        throw ParseError(where + ": bad region_id: " + fields[1]);
      }
      make_stay(trim(fields[0]), region, trim(fields[2]), trim(fields[3]), where);
    }
  } else {
    for_each_jsonl(path, [&](const json& j, size_t lineno) {
      if (j.contains("_meta")) return;
      const std::string where = path.string() + ":" + std::to_string(lineno);
      make_stay(j.at("user_pseudo_id").get<std::string>(), j.at("region_id").get<RegionId>(),
                j.at("start_iso8601").get<std::string>(),
                j.at("end_iso8601").get<std::string>(), where);
    });
  }
  return stays;
}

/// Groups stays into user-days: one entry per (user, date) a stay
/// overlaps, so a stay spanning midnight feeds both days.
inline std::map<std::pair<std::string, CivilDate>, std::vector<StayRecord>> group_user_days(
    const std::vector<StayRecord>& stays) {
  std::map<std::pair<std::string, CivilDate>, std::vector<StayRecord>> days;
  for (const StayRecord& s : stays) {
    const std::int64_t first_day = s.start.local_minutes / kMinutesPerDay;
    const std::int64_t last_day = (s.end.local_minutes - 1) / kMinutesPerDay;
    for (std::int64_t d = first_day; d <= last_day; ++d) {
      days[{s.user_pseudo_id, civil_from_days(d)}].push_back(s);
    }
  }
  return days;
}

}  // namespace trajsem
