#ifndef URBANFORM_SYNTHETIC_HPP
#define URBANFORM_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanform/errors.hpp"
#include "urbanform/geometry.hpp"
#include "urbanform/random.hpp"
#include "urbanform/raster.hpp"
#include "urbanform/sampler.hpp"

namespace urbanform {

enum class ShapeFamily { rectangle, l_shape, cross };
enum class Orientation { street_aligned, scattered };

// Generative description of one neighborhood type. Buildings sit on a square
// lattice of lots (pitch `spacing`), each offset by up to `jitter` meters.
// Street-aligned lattices share one random street angle per layout with a
// small per-building deviation; scattered buildings take any orientation.
struct ClassRecipe {
  std::string name;
  int category = 0;
  double area_min = 40.0;   // m^2
  double area_max = 60.0;
  std::vector<ShapeFamily> shapes{ShapeFamily::rectangle};
  double aspect_min = 1.2;  // rectangles: long side / short side
  double aspect_max = 1.8;
  double arm_min = 0.28;    // L and cross: arm width / sqrt(area)
  double arm_max = 0.34;
  double spacing = 14.0;
  double jitter = 0.5;
  Orientation orientation = Orientation::street_aligned;
  double angle_jitter_deg = 2.0;
  double occupancy = 0.9;   // probability that a lot is built
};

struct SyntheticSpec {
  std::vector<ClassRecipe> classes;

  // Dense street-aligned small rectangles (low income) against sparse
  // scattered L and cross shaped houses (high income).
  static SyntheticSpec two_class() {
    ClassRecipe grid;
    grid.name = "dense-grid";
    grid.category = 1;
    ClassRecipe scattered;
    scattered.name = "sparse-scattered";
    scattered.category = 6;
    scattered.area_min = 200.0;
    scattered.area_max = 400.0;
    scattered.shapes = {ShapeFamily::l_shape, ShapeFamily::cross};
    scattered.spacing = 66.0;
    scattered.jitter = 5.0;
    scattered.orientation = Orientation::scattered;
    return {{grid, scattered}};
  }
};

// Building outlines centered on their bounding box center, before rotation.
inline Polygon rectangle_building(double area_m2, double aspect) {
  const double w = std::sqrt(area_m2 * aspect), h = std::sqrt(area_m2 / aspect);
  return rectangle(-w / 2, -h / 2, w / 2, h / 2);
}

// Arm width k*sqrt(S) and leg length sqrt(S)(1/k + k)/2 give area S and
// contour complexity 2(1/k + k) for both the L and the cross.
inline double arm_leg_length(double area_m2, double arm_ratio) {
  return std::sqrt(area_m2) * (1.0 / arm_ratio + arm_ratio) / 2.0;
}

inline Polygon l_building(double area_m2, double arm_ratio) {
  const double a = arm_ratio * std::sqrt(area_m2);
  const double len = arm_leg_length(area_m2, arm_ratio);
  const double o = len / 2;
  return {{{-o, -o}, {len - o, -o}, {len - o, a - o}, {a - o, a - o}, {a - o, len - o}, {-o, len - o}, {-o, -o}},
          {}};
}

inline Polygon cross_building(double area_m2, double arm_ratio) {
  const double w = arm_ratio * std::sqrt(area_m2) / 2;
  const double h = arm_leg_length(area_m2, arm_ratio) / 2;
  return {{{-w, -h}, {w, -h}, {w, -w}, {h, -w}, {h, w}, {w, w}, {w, h}, {-w, h}, {-w, w}, {-h, w}, {-h, -w},
           {-w, -w}, {-w, -h}},
          {}};
}

// Diameter of the circle about the bounding-box center that holds any
// building the recipe can produce.
inline double max_building_diameter(const ClassRecipe& r) {
  double d = 0.0;
  for (const auto s : r.shapes) {
    if (s == ShapeFamily::rectangle) {
      d = std::max(d, std::sqrt(r.area_max * (r.aspect_max + 1.0 / r.aspect_max)));
    } else {
      const double k = std::min(r.arm_min, r.arm_max);
      d = std::max(d, std::sqrt(2.0) * arm_leg_length(r.area_max, k));
    }
  }
  return d;
}

inline void validate(const ClassRecipe& r) {
  if (r.shapes.empty()) throw InputError("recipe '" + r.name + "' has no shape families");
  if (!(r.area_min > 0.0) || r.area_max < r.area_min) throw InputError("recipe '" + r.name + "' has a bad area range");
  if (!(r.aspect_min >= 1.0) || r.aspect_max < r.aspect_min) throw InputError("recipe '" + r.name + "' has a bad aspect range");
  if (!(r.arm_min > 0.0) || r.arm_max < r.arm_min || r.arm_max >= 1.0) {
    throw InputError("recipe '" + r.name + "' has a bad arm ratio range");
  }
  if (!(r.spacing > 0.0) || r.jitter < 0.0) throw InputError("recipe '" + r.name + "' has a bad spacing");
  if (max_building_diameter(r) + 2.0 * r.jitter > r.spacing) {
    throw InputError("recipe '" + r.name + "': buildings up to " + std::to_string(max_building_diameter(r)) +
                     " m across cannot fit a " + std::to_string(r.spacing) + " m lattice with " +
                     std::to_string(r.jitter) + " m jitter");
  }
}

inline void validate(const SyntheticSpec& spec) {
  if (spec.classes.size() < 2) throw InputError("synthetic spec needs recipes for at least two classes");
  for (const auto& r : spec.classes) {
    validate(r);
    IncomeCategory{r.category};
  }
}

// Lays buildings of one recipe over `region`. Lots whose building would not
// touch the region are skipped.
inline std::vector<Polygon> lay_out(const ClassRecipe& recipe, const Box& region, Rng& rng) {
  validate(recipe);
  const double street = recipe.orientation == Orientation::street_aligned ? rng.uniform(0.0, std::numbers::pi / 2) : 0.0;
  const Point origin{rng.uniform(0.0, recipe.spacing), rng.uniform(0.0, recipe.spacing)};
  const double cs = std::cos(street), sn = std::sin(street);
  const double reach = max_building_diameter(recipe) / 2 + recipe.jitter;
  const Box grown{region.min_x - reach, region.min_y - reach, region.max_x + reach, region.max_y + reach};

  // Lattice index range covering the grown region in the rotated frame.
  const Point c{(grown.min_x + grown.max_x) / 2, (grown.min_y + grown.max_y) / 2};
  const double radius = std::hypot(grown.width(), grown.height()) / 2 + recipe.spacing;
  const auto lo_i = static_cast<long>(std::floor(((c.x - origin.x) * cs + (c.y - origin.y) * sn - radius) / recipe.spacing));
  const auto lo_j = static_cast<long>(std::floor((-(c.x - origin.x) * sn + (c.y - origin.y) * cs - radius) / recipe.spacing));
  const auto steps = static_cast<long>(std::ceil(2 * radius / recipe.spacing)) + 1;

  std::vector<Polygon> out;
  for (long i = lo_i; i <= lo_i + steps; ++i) {
    for (long j = lo_j; j <= lo_j + steps; ++j) {
      // Draw every random quantity so the stream does not depend on culling.
      const double u = i * recipe.spacing, v = j * recipe.spacing;
      const double jx = rng.uniform(-recipe.jitter, recipe.jitter);
      const double jy = rng.uniform(-recipe.jitter, recipe.jitter);
      const bool built = rng.uniform() < recipe.occupancy;
      const double a = rng.uniform(recipe.area_min, recipe.area_max);
      const auto shape = recipe.shapes[static_cast<std::size_t>(rng.below(recipe.shapes.size()))];
      const double aspect = rng.uniform(recipe.aspect_min, recipe.aspect_max);
      const double arm = rng.uniform(recipe.arm_min, recipe.arm_max);
      const double turn = recipe.orientation == Orientation::street_aligned
                              ? street + rng.uniform(-1.0, 1.0) * recipe.angle_jitter_deg * std::numbers::pi / 180.0
                              : rng.uniform(0.0, std::numbers::pi);
      const Point center{origin.x + u * cs - v * sn + jx, origin.y + u * sn + v * cs + jy};
      if (!built || !grown.contains(center)) continue;

      Polygon b = shape == ShapeFamily::rectangle ? rectangle_building(a, aspect)
                  : shape == ShapeFamily::l_shape ? l_building(a, arm)
                                                  : cross_building(a, arm);
      b = translated(rotated(b, turn), center.x, center.y);
      if (!bounds(b).intersects(region)) continue;
      out.push_back(std::move(b));
    }
  }
  return out;
}

struct SyntheticTile {
  TileGeometry geometry;
  IncomeCategory category{0};
  std::size_t recipe = 0;
};

// n_tiles tiles, class recipes assigned round-robin. Tile i is generated from
// its own derived seed, so any tile can be regenerated in isolation.
inline std::vector<SyntheticTile> generate_synthetic(const SyntheticSpec& spec, std::size_t n_tiles, std::uint64_t seed,
                                                     double extent = kDefaultExtent) {
  validate(spec);
  std::vector<SyntheticTile> tiles;
  tiles.reserve(n_tiles);
  const Box box = Box::centered({0.0, 0.0}, extent / 2, extent / 2);
  for (std::size_t i = 0; i < n_tiles; ++i) {
    const std::size_t r = i % spec.classes.size();
    Rng rng(derive_seed(seed, "synthetic-tile/" + std::to_string(i)));
    std::vector<FootprintPolygon> fps;
    for (auto& p : lay_out(spec.classes[r], box, rng)) {
      fps.push_back({"s" + std::to_string(i) + "-" + std::to_string(fps.size()), std::move(p)});
    }
    SamplePoint center;
    center.id = i;
    center.category = IncomeCategory{spec.classes[r].category};
    tiles.push_back({clip_tile(FootprintIndex(std::move(fps)), center, extent), IncomeCategory{spec.classes[r].category}, r});
  }
  return tiles;
}

// A named rectangular neighborhood built from one recipe.
struct Neighborhood {
  std::string zip;
  Box area;
  std::size_t recipe = 0;
  double median_income = 0.0;
};

// Vector inputs for a small synthetic town in the same formats as real data:
// footprints, land use (residential neighborhoods plus one commercial strip),
// zip boundaries and an income table.
struct SyntheticTown {
  std::string footprints_geojson;
  std::string landuse_geojson;
  std::string zips_geojson;
  std::string income_csv;
  std::vector<FootprintPolygon> footprints;  // in the town's local frame
  std::vector<Neighborhood> neighborhoods;
};

namespace detail {

inline nlohmann::json ring_json(const Ring& ring, const LocalProjection& proj) {
  auto arr = nlohmann::json::array();
  for (const auto& p : ring) {
    const auto ll = proj.unproject(p);
    arr.push_back({ll.lon, ll.lat});
  }
  return arr;
}

inline nlohmann::json polygon_feature(const Polygon& poly, const LocalProjection& proj, nlohmann::json properties) {
  auto rings = nlohmann::json::array({ring_json(poly.exterior, proj)});
  for (const auto& h : poly.holes) rings.push_back(ring_json(h, proj));
  return {{"type", "Feature"},
          {"properties", std::move(properties)},
          {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(rings)}}}};
}

inline std::string collection(nlohmann::json features) {
  return nlohmann::json{{"type", "FeatureCollection"}, {"features", std::move(features)}}.dump() + "\n";
}

}  // namespace detail

// Two side-by-side 1 km neighborhoods, one per recipe of a two-class spec,
// with a commercial strip between them that is not residential.
inline SyntheticTown generate_town(const SyntheticSpec& spec, std::uint64_t seed, const LocalProjection& proj,
                                   double block = 1000.0) {
  validate(spec);
  SyntheticTown town;
  const double gap = 100.0;
  town.neighborhoods = {{"00101", Box{0.0, 0.0, block, block}, 0, 20000.0},
                        {"00102", Box{block + gap, 0.0, 2 * block + gap, block}, 1, 180000.0}};

  auto fp_features = nlohmann::json::array();
  auto zone_features = nlohmann::json::array();
  auto zip_features = nlohmann::json::array();
  std::ostringstream income;
  income << "zip,median_income\n";
  for (std::size_t k = 0; k < town.neighborhoods.size(); ++k) {
    const auto& n = town.neighborhoods[k];
    Rng rng(derive_seed(seed, "town/" + n.zip));
    for (auto& p : lay_out(spec.classes[n.recipe], n.area, rng)) {
      const auto c = centroid(p);
      if (!n.area.contains(c)) continue;
      const std::string id = n.zip + "-" + std::to_string(town.footprints.size());
      fp_features.push_back(detail::polygon_feature(p, proj, {{"id", id}}));
      town.footprints.push_back({id, std::move(p)});
    }
    const Polygon zone = rectangle(n.area.min_x + 20, n.area.min_y + 20, n.area.max_x - 20, n.area.max_y - 20);
    zone_features.push_back(detail::polygon_feature(zone, proj, {{"code", "R" + std::to_string(k + 1)}}));
    const Polygon zip_shape = rectangle(n.area.min_x - gap / 2, n.area.min_y - gap / 2, n.area.max_x + gap / 2,
                                        n.area.max_y + gap / 2);
    zip_features.push_back(detail::polygon_feature(zip_shape, proj, {{"zip", n.zip}}));
    income << n.zip << ',' << static_cast<long long>(n.median_income) << '\n';
  }
  zone_features.push_back(
      detail::polygon_feature(rectangle(block, 0.0, block + gap, block), proj, {{"code", "C1"}}));

  town.footprints_geojson = detail::collection(std::move(fp_features));
  town.landuse_geojson = detail::collection(std::move(zone_features));
  town.zips_geojson = detail::collection(std::move(zip_features));
  town.income_csv = income.str();
  return town;
}

}  // namespace urbanform

#endif  // URBANFORM_SYNTHETIC_HPP
