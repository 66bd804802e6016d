#ifndef URBANFORM_MORPHO_HPP
#define URBANFORM_MORPHO_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "urbanform/errors.hpp"
#include "urbanform/geometry.hpp"
#include "urbanform/raster.hpp"

namespace urbanform {

inline constexpr std::size_t kBins = 10;
inline constexpr std::size_t kFeatureDim = 4 * kBins;

using Histogram = std::array<double, kBins>;

// Feature families in concatenation order.
enum class Family { direction = 0, density = 1, area = 2, complexity = 3 };

inline constexpr std::array<const char*, 4> kFamilyPrefix = {"direction", "density", "area", "complexity"};

struct FeatureVector {
  Histogram direction{};
  Histogram density{};
  Histogram area{};
  Histogram complexity{};

  std::array<double, kFeatureDim> flatten() const {
    std::array<double, kFeatureDim> out{};
    const std::array<const Histogram*, 4> blocks = {&direction, &density, &area, &complexity};
    for (std::size_t b = 0; b < 4; ++b) {
      for (std::size_t k = 0; k < kBins; ++k) out[b * kBins + k] = (*blocks[b])[k];
    }
    return out;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// direction0..direction9, density0..9, area0..9, complexity0..9.
inline std::array<std::string, kFeatureDim> feature_names() {
  std::array<std::string, kFeatureDim> names;
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t k = 0; k < kBins; ++k) names[b * kBins + k] = kFamilyPrefix[b] + std::to_string(k);
  }
  return names;
}

// Ten buckets [e_k, e_k+1). The last bucket is closed when the top edge is
// finite and `closed_top` is set, and unbounded when the top edge is +inf.
class BucketTable {
 public:
  BucketTable(std::array<double, kBins + 1> edges, bool closed_top) : edges_(edges), closed_top_(closed_top) {
    for (std::size_t k = 0; k < kBins; ++k) {
      if (!(edges_[k] < edges_[k + 1])) throw std::logic_error("bucket edges must be strictly increasing");
    }
  }

  std::optional<std::size_t> bucket(double v) const {
    if (!(v >= edges_.front())) return std::nullopt;
    if (v > edges_.back() || (v == edges_.back() && !closed_top_)) return std::nullopt;
    for (std::size_t k = 0; k < kBins; ++k) {
      if (v < edges_[k + 1]) return k;
    }
    return kBins - 1;  // v == top edge, closed
  }

  const std::array<double, kBins + 1>& edges() const { return edges_; }

 private:
  std::array<double, kBins + 1> edges_;
  bool closed_top_;
};

inline const BucketTable& density_buckets() {
  static const BucketTable t({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}, true);
  return t;
}

// Square meters, tuned around typical single-family, duplex and mid-rise
// footprints (about 37, 269 and 1690 m2).
inline const BucketTable& area_buckets() {
  static const BucketTable t(
      {0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0, 1000.0, std::numeric_limits<double>::infinity()},
      false);
  return t;
}

inline const BucketTable& complexity_buckets() {
  static const BucketTable t(
      {3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0, std::numeric_limits<double>::infinity()}, false);
  return t;
}

// Degrees of unsigned gradient orientation.
inline const BucketTable& direction_buckets() {
  static const BucketTable t({0.0, 18.0, 36.0, 54.0, 72.0, 90.0, 108.0, 126.0, 144.0, 162.0, 180.0}, false);
  return t;
}

// --- density ---------------------------------------------------------------

struct DensityWindow {
  int size;    // window side in pixels
  int stride;
  int pad;     // reflective padding on each side
};

// The full image once, then half- and quarter-size windows slid at half their
// length over a reflect-padded image (pad = stride / 2). For 224 px this is
// 1 + 16 + 64 = 81 windows.
inline std::array<DensityWindow, 3> density_windows(int resolution) {
  return {{{resolution, resolution, 0},
           {resolution / 2, resolution / 4, resolution / 8},
           {resolution / 4, resolution / 8, resolution / 16}}};
}

// Mirror about the edge pixel without repeating it (…2 1 | 0 1 2 …).
inline int reflect_index(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

inline Histogram density_histogram(std::span<const std::uint8_t> binary, int resolution) {
  if (resolution <= 0 || resolution % 16 != 0 ||
      binary.size() != static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution)) {
    throw InputError("density raster must be square with a side divisible by 16");
  }
  std::array<std::size_t, kBins> counts{};
  std::size_t windows = 0;
  for (const auto& w : density_windows(resolution)) {
    // Summed-area table of the padded image.
    const int side = resolution + 2 * w.pad;
    const auto stride = static_cast<std::size_t>(side + 1);
    std::vector<std::uint32_t> sat(stride * stride, 0);
    for (int r = 0; r < side; ++r) {
      const int sr = reflect_index(r - w.pad, resolution);
      std::uint32_t row_sum = 0;
      for (int c = 0; c < side; ++c) {
        const int sc = reflect_index(c - w.pad, resolution);
        row_sum += binary[static_cast<std::size_t>(sr * resolution + sc)];
        sat[static_cast<std::size_t>(r + 1) * stride + static_cast<std::size_t>(c + 1)] =
            sat[static_cast<std::size_t>(r) * stride + static_cast<std::size_t>(c + 1)] + row_sum;
      }
    }
    const double pixels = static_cast<double>(w.size) * w.size;
    for (int r0 = 0; r0 + w.size <= side; r0 += w.stride) {
      for (int c0 = 0; c0 + w.size <= side; c0 += w.stride) {
        const auto at = [&](int r, int c) {
          return sat[static_cast<std::size_t>(r) * stride + static_cast<std::size_t>(c)];
        };
        const std::uint32_t black =
            at(r0 + w.size, c0 + w.size) - at(r0, c0 + w.size) - at(r0 + w.size, c0) + at(r0, c0);
        const auto k = density_buckets().bucket(static_cast<double>(black) / pixels);
        ++counts[*k];
        ++windows;
      }
    }
  }
  Histogram h{};
  for (std::size_t k = 0; k < kBins; ++k) h[k] = static_cast<double>(counts[k]) / static_cast<double>(windows);
  return h;
}

inline Histogram density_histogram(const TileRaster& raster) { return density_histogram(raster.binary, raster.size); }

// --- per-building features ---------------------------------------------------

namespace detail {

template <typename F>
Histogram bucket_fractions(std::span<const Polygon> members, const BucketTable& table, F&& value) {
  Histogram h{};
  if (members.empty()) return h;
  std::array<std::size_t, kBins> counts{};
  for (const auto& m : members) {
    const double v = value(m);
    const auto k = table.bucket(v);
    if (!k) throw std::logic_error("building feature value " + std::to_string(v) + " outside bucket domain");
    ++counts[*k];
  }
  for (std::size_t k = 0; k < kBins; ++k) {
    h[k] = static_cast<double>(counts[k]) / static_cast<double>(members.size());
  }
  return h;
}

}  // namespace detail

inline Histogram area_histogram(std::span<const Polygon> members) {
  return detail::bucket_fractions(members, area_buckets(), [](const Polygon& p) { return area(p); });
}

// Exterior perimeter over the square root of the (hole-free) polygon area.
// 4 for a square, approaching 2*sqrt(pi) for a circle.
inline double contour_complexity(const Polygon& poly) {
  const double a = area(poly);
  if (!(a > 0.0)) throw InputError("contour complexity needs a polygon with positive area");
  return perimeter(poly.exterior) / std::sqrt(a);
}

// Values below 3 cannot come from a simple polygon and surface as logic_error.
inline Histogram complexity_histogram(std::span<const Polygon> members) {
  return detail::bucket_fractions(members, complexity_buckets(), contour_complexity);
}

// --- directionality ----------------------------------------------------------

inline constexpr double kEdgeEpsilon = 1e-12;

// Unsigned orientation in degrees, [0, 180). The sign flip makes the result
// exactly invariant under negating both components.
inline double gradient_orientation(double gx, double gy) {
  if (gy < 0.0 || (gy == 0.0 && gx < 0.0)) {
    gx = -gx;
    gy = -gy;
  }
  const double deg = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
  return deg >= 180.0 ? 0.0 : deg;
}

// Centered [-1, 0, +1] differences on interior pixels. gx points east and gy
// north (row 0 is north), so a vertical building edge reads 0 degrees and a
// horizontal one 90. Pixels with any nonzero gradient are building edges;
// each counts once regardless of magnitude.
inline Histogram direction_histogram(std::span<const double> coverage, int resolution) {
  if (resolution < 3 ||
      coverage.size() != static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution)) {
    throw InputError("direction raster must be square and at least 3 pixels wide");
  }
  const auto at = [&](int r, int c) { return coverage[static_cast<std::size_t>(r * resolution + c)]; };
  std::array<std::size_t, kBins> counts{};
  std::size_t edges = 0;
  for (int r = 1; r + 1 < resolution; ++r) {
    for (int c = 1; c + 1 < resolution; ++c) {
      const double gx = at(r, c + 1) - at(r, c - 1);
      const double gy = at(r - 1, c) - at(r + 1, c);
      if (!(std::sqrt(gx * gx + gy * gy) > kEdgeEpsilon)) continue;
      ++counts[*direction_buckets().bucket(gradient_orientation(gx, gy))];
      ++edges;
    }
  }
  Histogram h{};
  if (edges == 0) return h;
  for (std::size_t k = 0; k < kBins; ++k) h[k] = static_cast<double>(counts[k]) / static_cast<double>(edges);
  return h;
}

inline Histogram direction_histogram(const TileRaster& raster) {
  return direction_histogram(raster.coverage, raster.size);
}

// --- assembly ----------------------------------------------------------------

inline FeatureVector featurize(const TileGeometry& tile, const TileRaster& raster) {
  FeatureVector f;
  f.direction = direction_histogram(raster);
  f.density = density_histogram(raster);
  f.area = area_histogram(tile.members);
  f.complexity = complexity_histogram(tile.members);
  return f;
}

}  // namespace urbanform

#endif  // URBANFORM_MORPHO_HPP
