#ifndef URBANFORM_GEODATA_HPP
#define URBANFORM_GEODATA_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanform/csv.hpp"
#include "urbanform/errors.hpp"
#include "urbanform/geometry.hpp"
#include "urbanform/projection.hpp"
#include "urbanform/spatial_index.hpp"

namespace urbanform {

// One building outline in a local metric frame. Exterior counter-clockwise,
// holes clockwise, all rings closed and simple.
struct FootprintPolygon {
  std::string id;
  Polygon shape;
};

struct ResidentialZone {
  Polygon polygon;
  std::string zone_code;
};

struct FootprintSet {
  std::vector<FootprintPolygon> polygons;
  std::size_t rejected = 0;      // invalid rings (self-intersecting, degenerate)
  std::size_t non_polygon = 0;   // features skipped for geometry type
};

struct LandUseSet {
  std::vector<ResidentialZone> zones;
  std::size_t rejected = 0;
  std::size_t non_polygon = 0;
  std::size_t missing_code = 0;
};

// Validates and normalizes projected rings: closes them, drops repeated
// vertices, rejects fewer than 4 points, zero area or self-intersection, and
// orients the exterior counter-clockwise and holes clockwise.
inline std::optional<Polygon> normalize_polygon(std::vector<Ring> rings) {
  if (rings.empty()) return std::nullopt;
  Polygon out;
  for (std::size_t k = 0; k < rings.size(); ++k) {
    Ring r = close_ring(std::move(rings[k]));
    if (r.size() < 4 || signed_area(r) == 0.0 || !is_simple(r)) return std::nullopt;
    orient_ring(r, k == 0);
    if (k == 0) {
      out.exterior = std::move(r);
    } else {
      out.holes.push_back(std::move(r));
    }
  }
  return out;
}

namespace detail {

inline nlohmann::json parse_json(std::string_view bytes) {
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
}

inline const nlohmann::json& features_of(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw ParseError("expected a GeoJSON FeatureCollection", 0);
  }
  return doc["features"];
}

// Coordinates of one linear ring, or nullopt when the JSON shape is wrong.
inline std::optional<std::vector<LonLat>> read_ring(const nlohmann::json& j) {
  if (!j.is_array()) return std::nullopt;
  std::vector<LonLat> ring;
  ring.reserve(j.size());
  for (const auto& pos : j) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) return std::nullopt;
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  return ring;
}

// Polygon parts of a geometry in lon/lat. Empty optional for non-polygon
// geometry types; an empty inner optional marks a structurally broken part.
using GeoParts = std::vector<std::optional<std::vector<std::vector<LonLat>>>>;

inline std::optional<GeoParts> polygon_parts(const nlohmann::json& geometry) {
  if (!geometry.is_object()) return std::nullopt;
  const std::string type = geometry.value("type", "");
  const auto coords = geometry.find("coordinates");
  auto read_polygon = [](const nlohmann::json& rings) -> std::optional<std::vector<std::vector<LonLat>>> {
    if (!rings.is_array() || rings.empty()) return std::nullopt;
    std::vector<std::vector<LonLat>> out;
    for (const auto& r : rings) {
      auto ring = read_ring(r);
      if (!ring) return std::nullopt;
      out.push_back(std::move(*ring));
    }
    return out;
  };
  GeoParts parts;
  if (type == "Polygon") {
    if (coords == geometry.end()) return GeoParts{std::nullopt};
    parts.push_back(read_polygon(*coords));
  } else if (type == "MultiPolygon") {
    if (coords == geometry.end() || !coords->is_array()) return GeoParts{std::nullopt};
    for (const auto& poly : *coords) parts.push_back(read_polygon(poly));
  } else {
    return std::nullopt;
  }
  return parts;
}

inline std::optional<Polygon> project_part(const std::optional<std::vector<std::vector<LonLat>>>& part,
                                           const LocalProjection& proj) {
  if (!part) return std::nullopt;
  std::vector<Ring> rings;
  for (const auto& r : *part) {
    Ring ring;
    ring.reserve(r.size());
    for (const auto& ll : r) ring.push_back(proj.project(ll));
    rings.push_back(std::move(ring));
  }
  return normalize_polygon(std::move(rings));
}

inline std::string feature_id(const nlohmann::json& feature, std::size_t index) {
  auto stringify = [](const nlohmann::json& v) -> std::optional<std::string> {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    return std::nullopt;
  };
  if (const auto it = feature.find("id"); it != feature.end()) {
    if (auto s = stringify(*it)) return *s;
  }
  if (const auto p = feature.find("properties"); p != feature.end() && p->is_object()) {
    if (const auto it = p->find("id"); it != p->end()) {
      if (auto s = stringify(*it)) return *s;
    }
  }
  return "f" + std::to_string(index);
}

inline std::optional<std::string> property_string(const nlohmann::json& feature, std::string_view key) {
  const auto p = feature.find("properties");
  if (p == feature.end() || !p->is_object()) return std::nullopt;
  const auto it = p->find(std::string(key));
  if (it == p->end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number()) return csv::format_double(it->get<double>());
  return std::nullopt;
}

}  // namespace detail

// Lon/lat bounding box of every coordinate in a FeatureCollection. Used to
// pick a projection origin for a dataset.
inline Box lonlat_bounds(std::string_view geojson) {
  const auto doc = detail::parse_json(geojson);
  Box b;
  for (const auto& f : detail::features_of(doc)) {
    const auto parts = detail::polygon_parts(f.value("geometry", nlohmann::json{}));
    if (!parts) continue;
    for (const auto& part : *parts) {
      if (!part) continue;
      for (const auto& ring : *part) {
        for (const auto& ll : ring) b.expand(Point{ll.lon, ll.lat});
      }
    }
  }
  return b;
}

inline FootprintSet parse_footprints(std::string_view geojson, const LocalProjection& proj) {
  const auto doc = detail::parse_json(geojson);
  FootprintSet out;
  const auto& features = detail::features_of(doc);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const auto parts = detail::polygon_parts(f.value("geometry", nlohmann::json{}));
    if (!parts) {
      ++out.non_polygon;
      continue;
    }
    const std::string id = detail::feature_id(f, i);
    for (std::size_t k = 0; k < parts->size(); ++k) {
      auto poly = detail::project_part((*parts)[k], proj);
      if (!poly) {
        ++out.rejected;
        continue;
      }
      out.polygons.push_back({parts->size() > 1 ? id + "#" + std::to_string(k) : id, std::move(*poly)});
    }
  }
  return out;
}

inline LandUseSet parse_landuse(std::string_view geojson, const std::set<std::string>& residential_codes,
                                const LocalProjection& proj, std::string_view code_field = "code") {
  const auto doc = detail::parse_json(geojson);
  LandUseSet out;
  for (const auto& f : detail::features_of(doc)) {
    const auto code = detail::property_string(f, code_field);
    if (!code) {
      ++out.missing_code;
      continue;
    }
    if (!residential_codes.contains(*code)) continue;
    const auto parts = detail::polygon_parts(f.value("geometry", nlohmann::json{}));
    if (!parts) {
      ++out.non_polygon;
      continue;
    }
    for (const auto& part : *parts) {
      auto poly = detail::project_part(part, proj);
      if (!poly) {
        ++out.rejected;
        continue;
      }
      out.zones.push_back({std::move(*poly), *code});
    }
  }
  return out;
}

struct ZipHit {
  std::string zip;
  std::optional<double> income;  // nullopt: zip has a boundary but no income row
};

// Zip boundaries joined with median household income. Point lookups resolve
// overlaps to the smallest-area polygon (ties: lexicographically first zip).
class IncomeIndex {
 public:
  struct Stats {
    std::size_t rows_rejected = 0;      // non-numeric or negative income
    std::size_t duplicate_zips = 0;     // later row replaced an earlier one
    std::size_t zips_without_polygon = 0;
    std::size_t polygons_without_income = 0;
    std::size_t polygons_rejected = 0;
  };

  void add_zone(std::string zip, Polygon poly) {
    const double a = area(poly);
    index_.insert(bounds(poly));
    zones_.push_back({std::move(zip), std::move(poly), a});
  }

  void set_income(const std::string& zip, double income) { income_[zip] = income; }

  std::optional<ZipHit> lookup(Point p) const {
    const Zone* best = nullptr;
    for (const auto id : index_.query(p)) {
      const Zone& z = zones_[id];
      if (!point_in_polygon(p, z.polygon)) continue;
      if (!best || z.area < best->area || (z.area == best->area && z.zip < best->zip)) best = &z;
    }
    if (!best) return std::nullopt;
    const auto it = income_.find(best->zip);
    return ZipHit{best->zip, it == income_.end() ? std::nullopt : std::optional<double>(it->second)};
  }

  std::optional<double> income(const std::string& zip) const {
    const auto it = income_.find(zip);
    return it == income_.end() ? std::nullopt : std::optional<double>(it->second);
  }

  std::size_t zone_count() const { return zones_.size(); }
  Stats& stats() { return stats_; }
  const Stats& stats() const { return stats_; }

 private:
  struct Zone {
    std::string zip;
    Polygon polygon;
    double area;
  };
  std::vector<Zone> zones_;
  GridIndex index_{5000.0};
  std::map<std::string, double> income_;
  Stats stats_;
};

// Joins an income CSV (header with `zip` and `median_income` columns) with zip
// boundary polygons whose `zip_field` property names the zip.
inline IncomeIndex parse_income(std::string_view csv_text, std::string_view zip_geojson, const LocalProjection& proj,
                                std::string_view zip_field = "zip") {
  IncomeIndex index;
  auto& stats = index.stats();

  csv::Document table;
  try {
    table = csv::parse(csv_text);
  } catch (const std::runtime_error& e) {
    throw ParseError(std::string("income CSV: ") + e.what(), 0);
  }
  const auto zip_col = table.column("zip");
  const auto income_col = table.column("median_income");
  if (!zip_col || !income_col) throw ParseError("income CSV: header must contain zip and median_income", 0);

  std::map<std::string, double> incomes;
  for (const auto& row : table.rows) {
    if (row.size() <= std::max(*zip_col, *income_col)) {
      ++stats.rows_rejected;
      continue;
    }
    const auto value = csv::to_double(row[*income_col]);
    if (!value || *value < 0.0) {
      ++stats.rows_rejected;
      continue;
    }
    if (!incomes.insert_or_assign(row[*zip_col], *value).second) ++stats.duplicate_zips;
  }

  const auto doc = detail::parse_json(zip_geojson);
  std::set<std::string> with_polygon;
  for (const auto& f : detail::features_of(doc)) {
    const auto zip = detail::property_string(f, zip_field);
    const auto parts = detail::polygon_parts(f.value("geometry", nlohmann::json{}));
    if (!zip || !parts) {
      ++stats.polygons_rejected;
      continue;
    }
    for (const auto& part : *parts) {
      auto poly = detail::project_part(part, proj);
      if (!poly) {
        ++stats.polygons_rejected;
        continue;
      }
      if (!incomes.contains(*zip)) ++stats.polygons_without_income;
      index.add_zone(*zip, std::move(*poly));
      with_polygon.insert(*zip);
    }
  }
  for (const auto& [zip, value] : incomes) {
    if (with_polygon.contains(zip)) {
      index.set_income(zip, value);
    } else {
      ++stats.zips_without_polygon;
    }
  }
  return index;
}

}  // namespace urbanform

#endif  // URBANFORM_GEODATA_HPP
