#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "urbanform/geometry.hpp"
#include "urbanform/projection.hpp"
#include "urbanform/spatial_index.hpp"

using namespace urbanform;

namespace {

Polygon square_with_hole() {
  Polygon p = rectangle(0, 0, 10, 10);
  Ring hole = rectangle(4, 4, 6, 6).exterior;
  orient_ring(hole, false);
  p.holes.push_back(hole);
  return p;
}

}  // namespace

TEST(Geometry, RectangleIsClosedAndCounterClockwise) {
  const Polygon r = rectangle(0, 0, 4, 2);
  ASSERT_EQ(r.exterior.size(), 5u);
  EXPECT_EQ(r.exterior.front(), r.exterior.back());
  EXPECT_DOUBLE_EQ(signed_area(r.exterior), 8.0);
}

TEST(Geometry, AreaSubtractsHoles) {
  EXPECT_DOUBLE_EQ(area(square_with_hole()), 96.0);
}

TEST(Geometry, ShoelaceMatchesTriangleFormula) {
  const Ring tri = close_ring({{0, 0}, {3, 0}, {0, 4}});
  EXPECT_DOUBLE_EQ(std::abs(signed_area(tri)), 6.0);
  EXPECT_DOUBLE_EQ(perimeter(tri), 12.0);
}

TEST(Geometry, CentroidOfRectangleAndHoledSquare) {
  const Point c = centroid(rectangle(2, 4, 6, 10));
  EXPECT_DOUBLE_EQ(c.x, 4.0);
  EXPECT_DOUBLE_EQ(c.y, 7.0);
  const Point h = centroid(square_with_hole());
  EXPECT_NEAR(h.x, 5.0, 1e-12);
  EXPECT_NEAR(h.y, 5.0, 1e-12);
}

TEST(Geometry, OrientRingFlipsDirection) {
  Ring r = rectangle(0, 0, 1, 1).exterior;
  orient_ring(r, false);
  EXPECT_LT(signed_area(r), 0.0);
  orient_ring(r, true);
  EXPECT_GT(signed_area(r), 0.0);
}

TEST(Geometry, CloseRingDropsConsecutiveDuplicates) {
  const Ring r = close_ring({{0, 0}, {1, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_EQ(r.size(), 5u);
  EXPECT_EQ(r.front(), r.back());
}

TEST(Geometry, BowTieIsNotSimple) {
  EXPECT_FALSE(is_simple(close_ring({{0, 0}, {2, 2}, {2, 0}, {0, 2}})));
  EXPECT_TRUE(is_simple(rectangle(0, 0, 1, 1).exterior));
}

TEST(Geometry, PointInPolygonRespectsHoles) {
  const Polygon p = square_with_hole();
  EXPECT_TRUE(point_in_polygon({1, 1}, p));
  EXPECT_FALSE(point_in_polygon({5, 5}, p));
  EXPECT_FALSE(point_in_polygon({11, 5}, p));
}

TEST(Geometry, PointInRingAgreesWithAnalyticTriangle) {
  const Ring tri = close_ring({{0, 0}, {10, 0}, {0, 10}});
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2, 12);
  for (int i = 0; i < 2000; ++i) {
    const Point p{u(gen), u(gen)};
    const bool inside = p.x > 0 && p.y > 0 && p.x + p.y < 10;
    const bool edge = std::abs(p.x) < 1e-9 || std::abs(p.y) < 1e-9 || std::abs(p.x + p.y - 10) < 1e-9;
    if (!edge) EXPECT_EQ(point_in_ring(p, tri), inside) << p.x << "," << p.y;
  }
}

TEST(Geometry, ClipToBoxKeepsInsideArea) {
  const Polygon r = rectangle(-5, -5, 5, 5);
  const auto c = clip_polygon(r, Box{0, 0, 10, 10});
  ASSERT_TRUE(c.has_value());
  EXPECT_DOUBLE_EQ(area(*c), 25.0);
  EXPECT_FALSE(clip_polygon(r, Box{20, 20, 30, 30}).has_value());
}

TEST(Geometry, ClipRotatedSquareConservesAreaInsideBox) {
  // A diamond fully inside the box is untouched; half outside loses half.
  const Polygon d = rotated(rectangle(-1, -1, 1, 1), std::numbers::pi / 4);
  EXPECT_NEAR(area(*clip_polygon(d, Box{-5, -5, 5, 5})), 4.0, 1e-12);
  EXPECT_NEAR(area(*clip_polygon(d, Box{0, -5, 5, 5})), 2.0, 1e-12);
}

TEST(Geometry, ClipKeepsHoleInside) {
  const auto c = clip_polygon(square_with_hole(), Box{0, 0, 10, 10});
  ASSERT_TRUE(c.has_value());
  EXPECT_DOUBLE_EQ(area(*c), 96.0);
}

TEST(Geometry, RotationPreservesAreaAndPerimeter) {
  const Polygon r = rectangle(0, 0, 3, 7);
  const Polygon q = rotated(translated(r, 10, -4), 0.7);
  EXPECT_NEAR(area(q), 21.0, 1e-9);
  EXPECT_NEAR(perimeter(q.exterior), 20.0, 1e-9);
}

TEST(Projection, RoundTrip) {
  const LocalProjection proj({-71.06, 42.36});
  const LonLat ll{-71.05, 42.37};
  const LonLat back = proj.unproject(proj.project(ll));
  EXPECT_NEAR(back.lon, ll.lon, 1e-12);
  EXPECT_NEAR(back.lat, ll.lat, 1e-12);
}

TEST(Projection, ScaleFactors) {
  const LocalProjection proj({0.0, 60.0});
  EXPECT_DOUBLE_EQ(proj.k_y(), 111320.0);
  EXPECT_NEAR(proj.k_x(), 111320.0 * 0.5, 1e-9);
}

TEST(Projection, RejectsPolarOrigin) {
  EXPECT_THROW(LocalProjection({0.0, 86.0}), std::invalid_argument);
}

// Short distances in the local frame agree with great-circle distance.
TEST(Projection, DistancesAgreeWithHaversine) {
  const LonLat origin{-71.06, 42.36};
  const LocalProjection proj(origin);
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> d(-0.01, 0.01);
  for (int i = 0; i < 500; ++i) {
    const LonLat a{origin.lon + d(gen), origin.lat + d(gen)};
    const LonLat b{a.lon + d(gen) / 5, a.lat + d(gen) / 5};
    const Point pa = proj.project(a), pb = proj.project(b);
    const double planar = std::hypot(pa.x - pb.x, pa.y - pb.y);
    const double sphere = oracle::haversine(a.lon, a.lat, b.lon, b.lat);
    if (sphere < 1.0) continue;
    EXPECT_NEAR(planar / sphere, 1.0, 1e-3);
  }
}

TEST(GridIndex, QueryFindsExactlyIntersectingBoxes) {
  GridIndex index(10.0);
  std::vector<Box> boxes;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pos(-100, 100), size(0, 30);
  for (int i = 0; i < 300; ++i) {
    const double x = pos(gen), y = pos(gen);
    boxes.push_back({x, y, x + size(gen), y + size(gen)});
    index.insert(boxes.back());
  }
  for (int q = 0; q < 100; ++q) {
    const double x = pos(gen), y = pos(gen);
    const Box w{x, y, x + size(gen), y + size(gen)};
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (boxes[i].intersects(w)) expect.push_back(i);
    }
    EXPECT_EQ(index.query(w), expect);
  }
}
