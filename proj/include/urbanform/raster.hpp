#ifndef URBANFORM_RASTER_HPP
#define URBANFORM_RASTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "urbanform/errors.hpp"
#include "urbanform/geodata.hpp"
#include "urbanform/sampler.hpp"
#include "urbanform/spatial_index.hpp"

namespace urbanform {

inline constexpr double kDefaultExtent = 200.0;
inline constexpr int kDefaultResolution = 224;
inline constexpr int kSubsamples = 4;  // per pixel side

// Footprints in a region frame with a grid index for tile range queries.
class FootprintIndex {
 public:
  FootprintIndex() = default;

  explicit FootprintIndex(std::vector<FootprintPolygon> footprints, double cell = 250.0)
      : footprints_(std::move(footprints)), grid_(cell) {
    for (const auto& f : footprints_) grid_.insert(bounds(f.shape));
  }

  std::span<const FootprintPolygon> footprints() const { return footprints_; }
  std::vector<std::size_t> query(const Box& window) const { return grid_.query(window); }
  const FootprintPolygon& operator[](std::size_t i) const { return footprints_[i]; }
  std::size_t size() const { return footprints_.size(); }

 private:
  std::vector<FootprintPolygon> footprints_;
  GridIndex grid_;
};

// Geometry of one tile in tile-local meters: the center sits at (0, 0) and
// the extent is the box [-extent/2, extent/2]^2.
struct TileGeometry {
  SamplePoint center;
  double extent = kDefaultExtent;
  std::vector<Polygon> clipped;   // footprint ∩ box, for rendering
  std::vector<Polygon> members;   // whole footprints with centroid in the box
  std::vector<std::string> member_ids;

  Box box() const { return Box::centered({0.0, 0.0}, extent / 2, extent / 2); }
  bool empty() const { return clipped.empty() && members.empty(); }
};

// East-west scale from the region frame to a frame centered on `center`:
// the ratio of meters-per-degree of longitude at the two latitudes.
inline double tile_x_scale(const LocalProjection& region, LonLat center) {
  return std::cos(center.lat * std::numbers::pi / 180.0) /
         std::cos(region.origin().lat * std::numbers::pi / 180.0);
}

// Re-expresses region-frame footprints near `center` in the tile's own
// equirectangular frame, then splits them into clipped and member sets.
inline TileGeometry clip_tile(const FootprintIndex& index, const SamplePoint& center, double extent = kDefaultExtent,
                              double x_scale = 1.0) {
  if (!(extent > 0.0) || !(x_scale > 0.0)) throw InputError("tile extent and scale must be positive");
  TileGeometry tile;
  tile.center = center;
  tile.extent = extent;
  const Box box = tile.box();
  const Point c = center.location;
  const Box window = Box::centered(c, extent / 2 / x_scale, extent / 2);
  for (const auto id : index.query(window)) {
    const Polygon local = transform(index[id].shape, [&](Point p) { return Point{(p.x - c.x) * x_scale, p.y - c.y}; });
    if (auto clipped = clip_polygon(local, box)) tile.clipped.push_back(std::move(*clipped));
    if (box.contains(centroid(local))) {
      tile.members.push_back(local);
      tile.member_ids.push_back(index[id].id);
    }
  }
  return tile;
}

// Anti-aliased figure-ground raster. Row 0 is the northern edge.
struct TileRaster {
  int size = kDefaultResolution;
  double meters_per_pixel = kDefaultExtent / kDefaultResolution;
  std::vector<double> coverage;       // building fraction per pixel in [0, 1]
  std::vector<std::uint8_t> binary;   // 1 = building (black)

  double coverage_at(int row, int col) const { return coverage[static_cast<std::size_t>(row * size + col)]; }
  std::uint8_t binary_at(int row, int col) const { return binary[static_cast<std::size_t>(row * size + col)]; }
};

// Thresholds coverage at one half; the binary channel is derived only here.
inline std::vector<std::uint8_t> threshold(std::span<const double> coverage) {
  std::vector<std::uint8_t> out(coverage.size());
  for (std::size_t i = 0; i < coverage.size(); ++i) out[i] = coverage[i] >= 0.5 ? 1 : 0;
  return out;
}

// Coverage by 4x4 point sampling per pixel: a sample counts when it lies in
// the even-odd interior of any clipped polygon (overlaps saturate at 1).
inline TileRaster rasterize(const TileGeometry& tile, int resolution = kDefaultResolution) {
  if (resolution < 3) throw InputError("raster resolution must be at least 3");
  TileRaster out;
  out.size = resolution;
  out.meters_per_pixel = tile.extent / resolution;
  const int sub = resolution * kSubsamples;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(sub) * static_cast<std::size_t>(sub), 0);

  const double half = tile.extent / 2;
  const double px = out.meters_per_pixel;
  std::vector<double> crossings;
  std::vector<std::pair<Point, Point>> edges;
  for (const auto& poly : tile.clipped) {
    // Pixel space: u to the east, v to the south, one unit per pixel.
    edges.clear();
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    auto add_ring = [&](const Ring& ring) {
      for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
        const Point a{(ring[k].x + half) / px, (half - ring[k].y) / px};
        const Point b{(ring[k + 1].x + half) / px, (half - ring[k + 1].y) / px};
        if (a.y == b.y) continue;
        edges.emplace_back(a, b);
        vmin = std::min({vmin, a.y, b.y});
        vmax = std::max({vmax, a.y, b.y});
      }
    };
    add_ring(poly.exterior);
    for (const auto& h : poly.holes) add_ring(h);
    if (edges.empty()) continue;

    const int row0 = std::max(0, static_cast<int>(std::ceil(vmin * kSubsamples - 0.5)));
    const int row1 = std::min(sub - 1, static_cast<int>(std::floor(vmax * kSubsamples - 0.5)));
    for (int i = row0; i <= row1; ++i) {
      const double v = (i + 0.5) / kSubsamples;
      crossings.clear();
      for (const auto& [a, b] : edges) {
        if ((a.y <= v && v < b.y) || (b.y <= v && v < a.y)) {
          crossings.push_back(a.x + (v - a.y) * (b.x - a.x) / (b.y - a.y));
        }
      }
      std::sort(crossings.begin(), crossings.end());
      auto* row = &mask[static_cast<std::size_t>(i) * static_cast<std::size_t>(sub)];
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        const int j0 = std::max(0, static_cast<int>(std::ceil(crossings[k] * kSubsamples - 0.5)));
        const int j1 = std::min(sub, static_cast<int>(std::ceil(crossings[k + 1] * kSubsamples - 0.5)));
        for (int j = j0; j < j1; ++j) row[j] = 1;
      }
    }
  }

  const auto n = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
  out.coverage.assign(n, 0.0);
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c) {
      int count = 0;
      for (int i = 0; i < kSubsamples; ++i) {
        const auto* row = &mask[static_cast<std::size_t>(r * kSubsamples + i) * static_cast<std::size_t>(sub)];
        for (int j = 0; j < kSubsamples; ++j) count += row[c * kSubsamples + j];
      }
      out.coverage[static_cast<std::size_t>(r * resolution + c)] =
          static_cast<double>(count) / (kSubsamples * kSubsamples);
    }
  }
  out.binary = threshold(out.coverage);
  return out;
}

}  // namespace urbanform

#endif  // URBANFORM_RASTER_HPP
