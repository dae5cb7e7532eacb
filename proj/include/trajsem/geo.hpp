#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "trajsem/errors.hpp"
#include "trajsem/util.hpp"

namespace trajsem {

using RegionId = std::int64_t;

// ---------------- function groups ----------------

/// The five urban-function buckets POI categories are grouped into.
/// The order is fixed; samplers and renderers concatenate in this order.
enum class FunctionGroup : int { Home = 0, Work = 1, School = 2, Leisure = 3, Other = 4 };

constexpr int kGroupCount = 5;

constexpr std::array<FunctionGroup, kGroupCount> all_groups() {
  return {FunctionGroup::Home, FunctionGroup::Work, FunctionGroup::School,
          FunctionGroup::Leisure, FunctionGroup::Other};
}

inline const char* group_name(FunctionGroup g) {
  switch (g) {
    case FunctionGroup::Home: return "Home";
    case FunctionGroup::Work: return "Work";
    case FunctionGroup::School: return "School";
    case FunctionGroup::Leisure: return "Leisure";
    case FunctionGroup::Other: return "Other";
  }
  throw Error("invalid function group");
}

inline FunctionGroup parse_group(std::string_view s) {
  for (FunctionGroup g : all_groups()) {
    if (iequals(s, group_name(g))) return g;
  }
  throw ParseError("unknown function group: " + std::string(s));
}

// ---------------- taxonomy ----------------

/// POI category taxonomy: dense category ids 0..M-1, each mapped to one
/// function group. Loaded from JSON: {"categories":[{id,name,group}]}.
class CategoryTaxonomy {
 public:
  struct Entry {
    int category_id = 0;
    std::string name;
    FunctionGroup group = FunctionGroup::Other;
  };

  explicit CategoryTaxonomy(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::vector<bool> seen(entries_.size(), false);
    for (const Entry& e : entries_) {
      if (e.category_id < 0 || static_cast<size_t>(e.category_id) >= entries_.size() ||
          seen[static_cast<size_t>(e.category_id)]) {
        throw ParseError("taxonomy category ids must be dense 0..M-1, got id " +
                         std::to_string(e.category_id));
      }
      seen[static_cast<size_t>(e.category_id)] = true;
      name_to_id_.emplace(e.name, e.category_id);
    }
    by_id_.resize(entries_.size());
    for (const Entry& e : entries_) by_id_[static_cast<size_t>(e.category_id)] = e;
  }

  int size() const { return static_cast<int>(entries_.size()); }

  bool has_id(int category_id) const {
    return category_id >= 0 && category_id < size();
  }

  const Entry& at(int category_id) const {
    if (!has_id(category_id)) {
      throw ParseError("unknown category id: " + std::to_string(category_id));
    }
    return by_id_[static_cast<size_t>(category_id)];
  }

  const std::string& name_of(int category_id) const { return at(category_id).name; }
  FunctionGroup group_of(int category_id) const { return at(category_id).group; }

  std::optional<int> id_of(std::string_view name) const {
    auto it = name_to_id_.find(std::string(name));
    if (it == name_to_id_.end()) return std::nullopt;
    return it->second;
  }

  /// Category ids belonging to one group, ascending.
  std::vector<int> categories_in_group(FunctionGroup g) const {
    std::vector<int> ids;
    for (int i = 0; i < size(); ++i) {
      if (by_id_[static_cast<size_t>(i)].group == g) ids.push_back(i);
    }
    return ids;
  }

 private:
  std::vector<Entry> entries_;
  std::vector<Entry> by_id_;
  std::unordered_map<std::string, int> name_to_id_;
};

inline CategoryTaxonomy load_taxonomy(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("taxonomy " + path.string() + ": " + e.what());
  }
  if (!doc.contains("categories") || !doc["categories"].is_array()) {
    throw ParseError("taxonomy " + path.string() + ": missing \"categories\" array");
  }
  std::vector<CategoryTaxonomy::Entry> entries;
  for (const json& c : doc["categories"]) {
    CategoryTaxonomy::Entry e;
    e.category_id = c.at("id").get<int>();
    e.name = c.at("name").get<std::string>();
    e.group = parse_group(c.at("group").get<std::string>());
    entries.push_back(std::move(e));
  }
  return CategoryTaxonomy(std::move(entries));
}

// ---------------- geometry ----------------

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const LatLon&, const LatLon&) = default;
};

constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance between two WGS84 points, haversine form.
inline double haversine_km(const LatLon& a, const LatLon& b) {
  constexpr double deg = 3.14159265358979323846 / 180.0;
  const double phi1 = a.lat * deg;
  const double phi2 = b.lat * deg;
  const double dphi = (b.lat - a.lat) * deg;
  const double dlam = (b.lon - a.lon) * deg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlam / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace detail {

inline bool on_segment(const LatLon& p, const LatLon& a, const LatLon& b) {
  const double cross =
      (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  if (std::fabs(cross) > 1e-12) return false;
  return p.lon >= std::min(a.lon, b.lon) - 1e-12 && p.lon <= std::max(a.lon, b.lon) + 1e-12 &&
         p.lat >= std::min(a.lat, b.lat) - 1e-12 && p.lat <= std::max(a.lat, b.lat) + 1e-12;
}

}  // namespace detail

/// Even-odd point-in-polygon over one ring (no holes). Points on the
/// boundary count as inside.
inline bool point_in_ring(const LatLon& p, const std::vector<LatLon>& ring) {
  const size_t n = ring.size();
  if (n < 3) return false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if (detail::on_segment(p, ring[j], ring[i])) return true;
  }
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const LatLon& a = ring[i];
    const LatLon& b = ring[j];
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
      if (p.lon < x) inside = !inside;
    }
  }
  return inside;
}

// ---------------- regions ----------------

struct Region {
  RegionId region_id = 0;
  std::string name;
  std::vector<LatLon> boundary;  // exterior ring; empty for centroid-only regions
  LatLon centroid;
};

/// Immutable set of spatial units. Safe to share across threads after load.
class RegionRegistry {
 public:
  explicit RegionRegistry(std::vector<Region> regions) {
    if (regions.empty()) throw ParseError("region registry must contain at least one region");
    for (Region& r : regions) {
      auto [it, inserted] = regions_.emplace(r.region_id, std::move(r));
      if (!inserted) {
        throw ParseError("duplicate region_id: " + std::to_string(it->first));
      }
    }
  }

  int size() const { return static_cast<int>(regions_.size()); }
  bool has(RegionId id) const { return regions_.count(id) > 0; }

  const Region& at(RegionId id) const {
    auto it = regions_.find(id);
    if (it == regions_.end()) throw UnknownRegion("unknown region_id: " + std::to_string(id));
    return it->second;
  }

  /// Regions in ascending region_id order.
  const std::map<RegionId, Region>& regions() const { return regions_; }

 private:
  std::map<RegionId, Region> regions_;
};

namespace detail {

inline LatLon ring_centroid(const std::vector<LatLon>& ring) {
  // Arithmetic mean of exterior-ring vertices; the closing duplicate
  // vertex, when present, is excluded.
  size_t n = ring.size();
  if (n > 1 && ring.front() == ring.back()) --n;
  if (n == 0) throw ParseError("empty polygon ring");
  double lat = 0.0, lon = 0.0;
  for (size_t i = 0; i < n; ++i) {
    lat += ring[i].lat;
    lon += ring[i].lon;
  }
  return LatLon{lat / static_cast<double>(n), lon / static_cast<double>(n)};
}

}  // namespace detail

/// Loads a GeoJSON FeatureCollection. Each feature needs an integer
/// `region_id` property; geometry is a Polygon (exterior ring used) or a
/// Point (centroid-only region). An optional `centroid` property
/// [lon, lat] overrides the computed vertex mean.
inline RegionRegistry load_regions(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("regions " + path.string() + ": " + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
    throw ParseError("regions " + path.string() + ": expected a GeoJSON FeatureCollection");
  }
  std::vector<Region> regions;
  for (const json& f : doc["features"]) {
    Region r;
    const json& props = f.at("properties");
    if (!props.contains("region_id") || !props["region_id"].is_number_integer()) {
      throw ParseError("regions " + path.string() +
                       ": every feature needs an integer region_id property");
    }
    r.region_id = props["region_id"].get<RegionId>();
    r.name = props.value("name", "");
    const json& geom = f.at("geometry");
    const std::string gtype = geom.value("type", "");
    if (gtype == "Polygon") {
      const json& ring = geom.at("coordinates").at(0);
      for (const json& pt : ring) {
        r.boundary.push_back(LatLon{pt.at(1).get<double>(), pt.at(0).get<double>()});
      }
      if (r.boundary.size() < 3) {
        throw ParseError("region " + std::to_string(r.region_id) + ": degenerate polygon");
      }
    } else if (gtype == "Point") {
      const json& pt = geom.at("coordinates");
      r.centroid = LatLon{pt.at(1).get<double>(), pt.at(0).get<double>()};
    } else {
      throw ParseError("region " + std::to_string(r.region_id) +
                       ": unsupported geometry type " + gtype);
    }
    if (props.contains("centroid")) {
      const json& c = props["centroid"];
      r.centroid = LatLon{c.at(1).get<double>(), c.at(0).get<double>()};
    } else if (!r.boundary.empty()) {
      r.centroid = detail::ring_centroid(r.boundary);
    }
    regions.push_back(std::move(r));
  }
  return RegionRegistry(std::move(regions));
}

/// Great-circle distance between two regions' centroids in km.
inline double region_distance(RegionId a, RegionId b, const RegionRegistry& registry) {
  if (a == b) {
    registry.at(a);
    return 0.0;
  }
  return haversine_km(registry.at(a).centroid, registry.at(b).centroid);
}

// ---------------- POIs ----------------

struct PoiRecord {
  std::string poi_id;
  int category_id = 0;
  double lat = 0.0;
  double lon = 0.0;
};

struct PoiLoadResult {
  std::vector<PoiRecord> records;
  std::size_t rejected = 0;
  std::vector<std::string> row_errors;  // one message per rejected row
};

/// Loads POIs from CSV with header `poi_id,category_name,lat,lon`.
/// Invalid rows are rejected and reported, never fatal.
inline PoiLoadResult load_pois(const std::filesystem::path& path,
                               const CategoryTaxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open POI file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("POI file is empty (missing header): " + path.string());
  {
    auto header = split_csv_line(trim(line));
    const std::vector<std::string> expected = {"poi_id", "category_name", "lat", "lon"};
    if (header.size() != expected.size() ||
        !std::equal(header.begin(), header.end(), expected.begin(),
                    [](const std::string& a, const std::string& b) { return iequals(trim(a), b); })) {
      throw ParseError("POI file " + path.string() +
                       ": expected header poi_id,category_name,lat,lon");
    }
  }
  PoiLoadResult out;
  size_t lineno = 1;
  auto reject = [&](const std::string& why) {
    ++out.rejected;
    out.row_errors.push_back("row " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_csv_line(line);
    } catch (const ParseError& e) {
      reject(e.what());
      continue;
    }
    if (fields.size() != 4) {
      reject("expected 4 fields, got " + std::to_string(fields.size()));
      continue;
    }
    PoiRecord rec;
    rec.poi_id = trim(fields[0]);
    const std::string cat_name = trim(fields[1]);
    auto cid = taxonomy.id_of(cat_name);
    if (!cid) {
      reject("unknown category: " + cat_name);
      continue;
    }
    rec.category_id = *cid;
    char* end = nullptr;
    rec.lat = std::strtod(fields[2].c_str(), &end);
    if (end == fields[2].c_str() || *end != '\0') {
      reject("bad lat: " + fields[2]);
      continue;
    }
    rec.lon = std::strtod(fields[3].c_str(), &end);
    if (end == fields[3].c_str() || *end != '\0') {
      reject("bad lon: " + fields[3]);
      continue;
    }
    if (rec.lat < -90.0 || rec.lat > 90.0) {
      reject("lat out of range: " + fields[2]);
      continue;
    }
    if (rec.lon < -180.0 || rec.lon > 180.0) {
      reject("lon out of range: " + fields[3]);
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

// ---------------- histograms / assignment ----------------

/// Per-region POI counts over the M taxonomy categories.
struct PoiHistogram {
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
};

/// Assigns every POI to exactly one region: point-in-polygon first
/// (ascending region_id when polygons overlap), nearest centroid as the
/// fallback, ties to the lower region_id. Every registry region gets a
/// histogram entry, zero-POI regions included.
inline std::map<RegionId, PoiHistogram> assign_pois_to_regions(
    const std::vector<PoiRecord>& pois, const RegionRegistry& registry,
    const CategoryTaxonomy& taxonomy) {
  std::map<RegionId, PoiHistogram> histograms;
  for (const auto& [id, region] : registry.regions()) {
    histograms[id].counts.assign(static_cast<size_t>(taxonomy.size()), 0);
  }
  for (const PoiRecord& poi : pois) {
    const LatLon p{poi.lat, poi.lon};
    RegionId target = 0;
    bool found = false;
    for (const auto& [id, region] : registry.regions()) {
      if (!region.boundary.empty() && point_in_ring(p, region.boundary)) {
        target = id;
        found = true;
        break;
      }
    }
    if (!found) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [id, region] : registry.regions()) {
        const double d = haversine_km(p, region.centroid);
        if (d < best) {
          best = d;
          target = id;
        }
      }
    }
    PoiHistogram& h = histograms[target];
    h.counts[static_cast<size_t>(poi.category_id)] += 1;
    h.total += 1;
  }
  return histograms;
}

}  // namespace trajsem
