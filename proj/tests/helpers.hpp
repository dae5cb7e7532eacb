#pragma once

// Shared fixtures and independent oracles for the test suite. Oracles
// deliberately use different mechanics than the library (per-minute grids
// instead of interval arithmetic, atan2 instead of asin, direct formula
// evaluation) so agreement is meaningful.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "trajsem/chain.hpp"
#include "trajsem/gateway.hpp"
#include "trajsem/prompt.hpp"
#include "trajsem/trajectory.hpp"

namespace testutil {

using trajsem::CivilDate;
using trajsem::LatLon;
using trajsem::RegionId;
using trajsem::StayRecord;
using trajsem::json;

inline std::filesystem::path repo_dir() { return std::filesystem::path(TRAJSEM_REPO_DIR); }

// ---------------- scratch space ----------------

class TempDir {
 public:
  TempDir() {
    static std::atomic<std::uint64_t> counter{0};
    std::random_device rd;
    const std::uint64_t tag =
        (static_cast<std::uint64_t>(rd()) << 16) ^ counter.fetch_add(1) ^
        static_cast<std::uint64_t>(
            std::chrono::steady_clock::now().time_since_epoch().count());
    path_ = std::filesystem::temp_directory_path() /
            ("trajsem-test-" + std::to_string(tag));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// ---------------- fixture builders ----------------

/// Category names for small_taxonomy_json, indexed by category id.
inline constexpr const char* kCategoryNames[10] = {
    "Residential", "Dormitory",      "Office", "Factory",  "Primary School",
    "University",  "Park",           "Restaurant", "Hospital", "Convenience Store"};

/// Ten categories, two per function group, ids 0..9.
inline json small_taxonomy_json() {
  return json{{"categories",
               json::array({
                   json{{"id", 0}, {"name", "Residential"}, {"group", "Home"}},
                   json{{"id", 1}, {"name", "Dormitory"}, {"group", "Home"}},
                   json{{"id", 2}, {"name", "Office"}, {"group", "Work"}},
                   json{{"id", 3}, {"name", "Factory"}, {"group", "Work"}},
                   json{{"id", 4}, {"name", "Primary School"}, {"group", "School"}},
                   json{{"id", 5}, {"name", "University"}, {"group", "School"}},
                   json{{"id", 6}, {"name", "Park"}, {"group", "Leisure"}},
                   json{{"id", 7}, {"name", "Restaurant"}, {"group", "Leisure"}},
                   json{{"id", 8}, {"name", "Hospital"}, {"group", "Other"}},
                   json{{"id", 9}, {"name", "Convenience Store"}, {"group", "Other"}},
               })}};
}

/// Axis-aligned square region feature with side `size` degrees and its
/// lower-left corner at (lat0, lon0).
inline json square_region_feature(RegionId id, double lat0, double lon0, double size = 1.0) {
  const double lat1 = lat0 + size, lon1 = lon0 + size;
  return json{{"type", "Feature"},
              {"properties", json{{"region_id", id}, {"name", "R" + std::to_string(id)}}},
              {"geometry",
               json{{"type", "Polygon"},
                    {"coordinates", json::array({json::array({
                        json::array({lon0, lat0}), json::array({lon1, lat0}),
                        json::array({lon1, lat1}), json::array({lon0, lat1}),
                        json::array({lon0, lat0})})})}}}};
}

inline json feature_collection(std::vector<json> features) {
  return json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

struct PoiRow {
  std::string poi_id;
  std::string category;
  double lat = 0.0;
  double lon = 0.0;
};

inline std::string pois_csv(const std::vector<PoiRow>& rows) {
  std::ostringstream out;
  out << "poi_id,category_name,lat,lon\n";
  out.precision(17);  // round-trip exact for doubles
  for (const PoiRow& r : rows) {
    out << r.poi_id << "," << r.category << "," << r.lat << "," << r.lon << "\n";
  }
  return out.str();
}

/// "YYYY-MM-DDTHH:MM" for minute-of-day `minute` relative to `date`
/// (values outside [0, 1440) roll into neighboring days).
inline std::string iso_minute(const CivilDate& date, std::int64_t minute) {
  const std::int64_t abs = trajsem::days_from_civil(date) * trajsem::kMinutesPerDay + minute;
  std::int64_t day = abs / trajsem::kMinutesPerDay;
  std::int64_t rem = abs % trajsem::kMinutesPerDay;
  if (rem < 0) {
    rem += trajsem::kMinutesPerDay;
    --day;
  }
  char buf[40];
  const CivilDate d = trajsem::civil_from_days(day);
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02lld:%02lld", d.year, d.month, d.day,
                static_cast<long long>(rem / 60), static_cast<long long>(rem % 60));
  return buf;
}

inline StayRecord make_stay(const std::string& user, RegionId region, const CivilDate& date,
                            std::int64_t start_minute, std::int64_t end_minute) {
  StayRecord s;
  s.user_pseudo_id = user;
  s.region_id = region;
  s.start = trajsem::parse_iso8601_minutes(iso_minute(date, start_minute));
  s.end = trajsem::parse_iso8601_minutes(iso_minute(date, end_minute));
  return s;
}

inline std::string stays_jsonl(const std::vector<StayRecord>& stays) {
  std::ostringstream out;
  for (const StayRecord& s : stays) {
    const std::int64_t sm = s.start.local_minutes, em = s.end.local_minutes;
    const CivilDate sd = trajsem::civil_from_days(sm / trajsem::kMinutesPerDay);
    const CivilDate ed = trajsem::civil_from_days(em / trajsem::kMinutesPerDay);
    out << json{{"user_pseudo_id", s.user_pseudo_id},
                {"region_id", s.region_id},
                {"start_iso8601", iso_minute(sd, sm % trajsem::kMinutesPerDay)},
                {"end_iso8601", iso_minute(ed, em % trajsem::kMinutesPerDay)}}
               .dump()
        << "\n";
  }
  return out.str();
}

// ---------------- independent oracles ----------------

/// Brute-force TF-IDF from raw per-region counts. counts[r][i] is the
/// POI count of category i in region index r.
inline std::vector<double> oracle_tfidf(const std::vector<std::vector<std::int64_t>>& counts,
                                        size_t r) {
  const size_t region_count = counts.size();
  const size_t category_count = counts[r].size();
  std::vector<double> weights(category_count, 0.0);
  double total = 0.0;
  for (std::int64_t c : counts[r]) total += static_cast<double>(c);
  if (total == 0.0) return weights;
  for (size_t i = 0; i < category_count; ++i) {
    if (counts[r][i] == 0) continue;
    std::int64_t q = 0;
    for (size_t k = 0; k < region_count; ++k) {
      if (counts[k][i] > 0) ++q;
    }
    weights[i] = (static_cast<double>(counts[r][i]) / total) *
                 std::log(static_cast<double>(region_count) / static_cast<double>(q));
  }
  return weights;
}

/// Haversine via the atan2 formulation (library uses asin).
inline double oracle_haversine_km(const LatLon& a, const LatLon& b) {
  const double deg = std::acos(-1.0) / 180.0;
  const double s1 = std::sin((b.lat - a.lat) * deg / 2.0);
  const double s2 = std::sin((b.lon - a.lon) * deg / 2.0);
  const double h = s1 * s1 + std::cos(a.lat * deg) * std::cos(b.lat * deg) * s2 * s2;
  return 2.0 * 6371.0 * std::atan2(std::sqrt(h), std::sqrt(std::max(0.0, 1.0 - h)));
}

struct OracleSlots {
  bool empty_day = true;
  std::vector<RegionId> regions;
  std::vector<int> coverage;
};

/// Per-minute slotting oracle. Dwell is accumulated minute by minute and
/// per stay (overlapping same-region stays count double, matching the
/// dwell-sum definition); the winner policy is the documented one: max
/// dwell, then earliest raw stay start, then lowest region id. Coverage
/// counts minutes covered by at least one stay. Gaps carry forward with
/// leading backfill.
inline OracleSlots oracle_slot(const std::vector<StayRecord>& stays, const CivilDate& date,
                               int slots_per_day) {
  const int slot_len = trajsem::kMinutesPerDay / slots_per_day;
  const std::int64_t day_start =
      trajsem::days_from_civil(date) * trajsem::kMinutesPerDay;

  OracleSlots out;
  out.regions.assign(static_cast<size_t>(slots_per_day), 0);
  out.coverage.assign(static_cast<size_t>(slots_per_day), 0);
  std::vector<bool> observed(static_cast<size_t>(slots_per_day), false);

  for (int l = 0; l < slots_per_day; ++l) {
    std::map<RegionId, std::pair<std::int64_t, std::int64_t>> dwell;  // region -> (minutes, earliest)
    std::vector<bool> covered(static_cast<size_t>(slot_len), false);
    for (const StayRecord& s : stays) {
      for (int m = 0; m < slot_len; ++m) {
        const std::int64_t minute = day_start + static_cast<std::int64_t>(l) * slot_len + m;
        if (minute >= s.start.local_minutes && minute < s.end.local_minutes) {
          auto [it, inserted] = dwell.try_emplace(s.region_id, 0, s.start.local_minutes);
          it->second.first += 1;
          it->second.second = std::min(it->second.second, s.start.local_minutes);
          covered[static_cast<size_t>(m)] = true;
        }
      }
    }
    if (dwell.empty()) continue;
    observed[static_cast<size_t>(l)] = true;
    out.empty_day = false;

    RegionId winner = dwell.begin()->first;
    auto best = dwell.begin()->second;
    for (const auto& [region, d] : dwell) {
      if (d.first > best.first || (d.first == best.first && d.second < best.second)) {
        winner = region;
        best = d;
      }
    }
    out.regions[static_cast<size_t>(l)] = winner;
    int cov = 0;
    for (bool c : covered) cov += c ? 1 : 0;
    out.coverage[static_cast<size_t>(l)] = cov;
  }

  if (out.empty_day) return out;
  RegionId carry = 0;
  for (int l = 0; l < slots_per_day; ++l) {
    if (observed[static_cast<size_t>(l)]) {
      carry = out.regions[static_cast<size_t>(l)];
      break;
    }
  }
  for (int l = 0; l < slots_per_day; ++l) {
    if (observed[static_cast<size_t>(l)]) {
      carry = out.regions[static_cast<size_t>(l)];
    } else {
      out.regions[static_cast<size_t>(l)] = carry;
    }
  }
  return out;
}

// ---------------- canned LLM output ----------------

/// Grammar-conformant response text for a trajectory of `length` slots.
/// Deterministic in (key, scenario_count); used both as replay fixture
/// content and as the parser round-trip generator baseline.
inline std::string canned_response(const std::string& key, int scenario_count, size_t length) {
  const auto& labels = trajsem::activity_type_labels();
  const std::vector<std::string> categories = trajsem::default_occupational_categories();
  const std::uint64_t h = trajsem::fnv1a64(key);
  std::ostringstream out;
  out << "Here are the inferred scenarios.\n\n";
  for (int s = 0; s < scenario_count; ++s) {
    const char label = static_cast<char>('A' + s);
    out << "Result " << label << ":\n";
    out << "Occupational Category: "
        << categories[(h + static_cast<std::uint64_t>(s)) % categories.size()] << "\n";
    out << "Activity Sequence: [";
    for (size_t l = 0; l < length; ++l) {
      if (l > 0) out << ", ";
      out << labels[(h / 5 + static_cast<std::uint64_t>(s) + l) % labels.size()];
    }
    out << "]\n";
    out << "Trajectory Description: Scenario " << label
        << " spends the morning near home, midday at the main activity area, and the "
           "evening back home; travel stays within a few kilometers.\n\n";
  }
  return out.str();
}

/// Writes a replay fixture file for one request into `fixture_dir`.
inline void write_fixture(const std::filesystem::path& fixture_dir,
                          const trajsem::LlmRequest& request, const std::string& text) {
  trajsem::write_text_file(fixture_dir / (request.request_key() + ".json"),
                           json{{"text", text}}.dump() + "\n");
}

// ---------------- transport test doubles ----------------

/// A syntactically valid chat-completion body carrying `text`.
inline std::string chat_body(const std::string& text) {
  return json{{"choices", json::array({json{{"message", json{{"content", text}}}}})},
              {"usage", json{{"prompt_tokens", 10}, {"completion_tokens", 5}}}}
      .dump();
}

/// Replays a fixed script of results; the last entry repeats.
struct ScriptedTransport : trajsem::Transport {
  std::vector<trajsem::TransportResult> script;
  std::atomic<int> calls{0};

  explicit ScriptedTransport(std::vector<trajsem::TransportResult> s) : script(std::move(s)) {}

  trajsem::TransportResult post(const std::string&, const std::string&, const std::string&,
                                int) override {
    const size_t i = static_cast<size_t>(calls.fetch_add(1));
    return script[std::min(i, script.size() - 1)];
  }
};

/// Counts concurrent post() calls; each call waits (bounded) for a peer
/// so true concurrency is observable, not timing-dependent.
struct RendezvousTransport : trajsem::Transport {
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};
  int expected_peers;

  explicit RendezvousTransport(int peers) : expected_peers(peers) {}

  trajsem::TransportResult post(const std::string&, const std::string&, const std::string&,
                                int) override {
    const int now = in_flight.fetch_add(1) + 1;
    int seen = max_in_flight.load();
    while (seen < now && !max_in_flight.compare_exchange_weak(seen, now)) {
    }
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (in_flight.load() < expected_peers &&
           std::chrono::steady_clock::now() < deadline) {
      std::this_thread::yield();
    }
    in_flight.fetch_sub(1);
    return {200, chat_body("ok"), false, ""};
  }
};

}  // namespace testutil
