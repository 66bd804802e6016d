#ifndef URBANFORM_PROJECTION_HPP
#define URBANFORM_PROJECTION_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "urbanform/geometry.hpp"

namespace urbanform {

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const LonLat&, const LonLat&) = default;
};

// Equirectangular projection about a local origin. Accurate to well under
// 0.1% of distance over a few hundred meters, which is all a tile spans.
class LocalProjection {
 public:
  static constexpr double kMetersPerDegree = 111320.0;

  LocalProjection() : LocalProjection(LonLat{0.0, 0.0}) {}

  explicit LocalProjection(LonLat origin)
      : origin_(origin),
        k_y_(kMetersPerDegree),
        k_x_(kMetersPerDegree * std::cos(origin.lat * std::numbers::pi / 180.0)) {
    if (!(std::abs(origin.lat) < 85.0)) {
      throw std::invalid_argument("projection origin latitude must be within +/-85 degrees");
    }
  }

  LonLat origin() const { return origin_; }
  double k_x() const { return k_x_; }
  double k_y() const { return k_y_; }

  Point project(LonLat p) const { return {(p.lon - origin_.lon) * k_x_, (p.lat - origin_.lat) * k_y_}; }

  LonLat unproject(Point p) const { return {origin_.lon + p.x / k_x_, origin_.lat + p.y / k_y_}; }

 private:
  LonLat origin_;
  double k_y_;
  double k_x_;
};

}  // namespace urbanform

#endif  // URBANFORM_PROJECTION_HPP
