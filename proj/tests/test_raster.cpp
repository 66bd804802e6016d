#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include <zlib.h>

#include "urbanform/image_io.hpp"
#include "urbanform/raster.hpp"
#include "urbanform/synthetic.hpp"

using namespace urbanform;

namespace {

TileGeometry tile_of(std::vector<Polygon> polys, double extent = 200.0) {
  TileGeometry t;
  t.extent = extent;
  t.clipped = std::move(polys);
  return t;
}

double total_coverage(const TileRaster& r) { return std::accumulate(r.coverage.begin(), r.coverage.end(), 0.0); }

}  // namespace

TEST(Raster, PixelAlignedRectangleIsExact) {
  // 224 px over 224 m: one meter per pixel, rows counted from the north.
  const auto r = rasterize(tile_of({rectangle(-100, 50, -90, 60)}, 224.0), 224);
  for (int row = 0; row < 224; ++row) {
    for (int col = 0; col < 224; ++col) {
      const bool inside = col >= 12 && col < 22 && row >= 52 && row < 62;
      ASSERT_EQ(r.coverage_at(row, col), inside ? 1.0 : 0.0) << row << "," << col;
      ASSERT_EQ(r.binary_at(row, col), inside ? 1 : 0);
    }
  }
}

TEST(Raster, HalfPixelEdgeGivesHalfCoverage) {
  const auto r = rasterize(tile_of({rectangle(-100, 50, -89.5, 60)}, 224.0), 224);
  EXPECT_EQ(r.coverage_at(55, 22), 0.5);
  EXPECT_EQ(r.binary_at(55, 22), 1);  // threshold is inclusive
  EXPECT_EQ(r.coverage_at(55, 23), 0.0);
}

TEST(Raster, CoverageApproximatesArea) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> pos(-80, 80), ang(0, 3.14159);
  for (int k = 0; k < 30; ++k) {
    const Polygon p = translated(rotated(rectangle(-9, -4, 9, 4), ang(gen)), pos(gen), pos(gen));
    const auto r = rasterize(tile_of({p}), 224);
    const double px = 200.0 / 224.0;
    EXPECT_NEAR(total_coverage(r) * px * px, area(p), 0.05 * area(p));
  }
}

TEST(Raster, HoleStaysEmpty) {
  Polygon p = rectangle(-50, -50, 50, 50);
  Ring hole = rectangle(-20, -20, 20, 20).exterior;
  orient_ring(hole, false);
  p.holes.push_back(hole);
  const auto r = rasterize(tile_of({p}, 224.0), 224);
  EXPECT_EQ(r.coverage_at(112, 112), 0.0);
  EXPECT_EQ(r.coverage_at(112, 70), 1.0);
  EXPECT_EQ(total_coverage(r), 100.0 * 100.0 - 40.0 * 40.0);
}

TEST(Raster, OverlapSaturates) {
  const auto r = rasterize(tile_of({rectangle(0, 0, 10, 10), rectangle(5, 5, 15, 15)}, 224.0), 224);
  for (const double v : r.coverage) EXPECT_LE(v, 1.0);
  EXPECT_EQ(total_coverage(r), 175.0);
}

TEST(Raster, ClipTileSplitsRenderAndMembers) {
  // One building straddles the east edge with its centroid outside; one sits inside.
  std::vector<FootprintPolygon> fps{{"edge", rectangle(95, -5, 125, 5)}, {"in", rectangle(-10, -10, 10, 10)},
                                    {"far", rectangle(500, 500, 510, 510)}};
  const FootprintIndex index(std::move(fps), 50.0);
  SamplePoint c;
  const auto tile = clip_tile(index, c, 200.0);
  EXPECT_EQ(tile.clipped.size(), 2u);
  ASSERT_EQ(tile.member_ids.size(), 1u);
  EXPECT_EQ(tile.member_ids[0], "in");
  EXPECT_DOUBLE_EQ(area(tile.members[0]), 400.0);
}

TEST(Raster, ClipTileAppliesEastWestScale) {
  std::vector<FootprintPolygon> fps{{"a", rectangle(40, -5, 60, 5)}};
  const FootprintIndex index(std::move(fps));
  SamplePoint c;
  const auto tile = clip_tile(index, c, 200.0, 0.5);
  ASSERT_EQ(tile.members.size(), 1u);
  EXPECT_DOUBLE_EQ(bounds(tile.members[0]).min_x, 20.0);
  EXPECT_DOUBLE_EQ(area(tile.members[0]), 100.0);
}

TEST(Raster, TileScaleFollowsLatitude) {
  const LocalProjection region({-71.0, 42.0});
  EXPECT_DOUBLE_EQ(tile_x_scale(region, {-71.0, 42.0}), 1.0);
  EXPECT_LT(tile_x_scale(region, {-71.0, 43.0}), 1.0);
}

TEST(ImageIo, PgmHeaderAndPolarity) {
  const auto r = rasterize(tile_of({rectangle(-100, 50, -90, 60)}, 224.0), 224);
  const auto pgm = encode_pgm(r);
  const std::string header = "P5\n224 224\n255\n";
  ASSERT_EQ(pgm.substr(0, header.size()), header);
  EXPECT_EQ(pgm.size(), header.size() + 224u * 224u);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 52 * 224 + 12]), 0);
  EXPECT_EQ(static_cast<unsigned char>(pgm[header.size()]), 255);
}

TEST(ImageIo, PngDecompressesToThePgmPixels) {
  const auto r = rasterize(tile_of({rotated(rectangle(-30, -10, 30, 10), 0.4)}), 224);
  const auto png = encode_png(r);
  ASSERT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  // IHDR is 8 + 13 + 4 bytes after the signature; IDAT follows.
  const std::size_t idat = 8 + 25;
  ASSERT_EQ(png.substr(idat + 4, 4), "IDAT");
  const auto len = (static_cast<std::uint32_t>(static_cast<unsigned char>(png[idat])) << 24) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(png[idat + 1])) << 16) |
                   (static_cast<std::uint32_t>(static_cast<unsigned char>(png[idat + 2])) << 8) |
                   static_cast<std::uint32_t>(static_cast<unsigned char>(png[idat + 3]));
  std::string raw(225u * 224u, '\0');
  uLongf raw_len = raw.size();
  ASSERT_EQ(uncompress(reinterpret_cast<Bytef*>(raw.data()), &raw_len,
                       reinterpret_cast<const Bytef*>(png.data() + idat + 8), len),
            Z_OK);
  ASSERT_EQ(raw_len, raw.size());
  const auto gray = gray_levels(r);
  for (std::size_t row = 0; row < 224; ++row) {
    ASSERT_EQ(raw[row * 225], '\0');
    for (std::size_t col = 0; col < 224; ++col) {
      ASSERT_EQ(static_cast<std::uint8_t>(raw[row * 225 + 1 + col]), gray[row * 224 + col]);
    }
  }
}

TEST(Synthetic, RecipesAreFeasibleAndInfeasibleOnesAreRejected) {
  const auto spec = SyntheticSpec::two_class();
  EXPECT_NO_THROW(validate(spec));
  auto bad = spec;
  bad.classes[1].spacing = 20.0;
  EXPECT_THROW(validate(bad), InputError);
}

TEST(Synthetic, ShapesHaveRequestedArea) {
  EXPECT_NEAR(area(rectangle_building(50.0, 1.5)), 50.0, 1e-9);
  EXPECT_NEAR(area(l_building(300.0, 0.3)), 300.0, 1e-9);
  EXPECT_NEAR(area(cross_building(300.0, 0.3)), 300.0, 1e-9);
  EXPECT_TRUE(is_simple(l_building(300.0, 0.3).exterior));
  EXPECT_TRUE(is_simple(cross_building(300.0, 0.3).exterior));
}

TEST(Synthetic, LayoutsNeverOverlap) {
  const auto spec = SyntheticSpec::two_class();
  for (const auto& recipe : spec.classes) {
    Rng rng(17);
    const auto polys = lay_out(recipe, Box{-100, -100, 100, 100}, rng);
    ASSERT_FALSE(polys.empty());
    const double sum = std::accumulate(polys.begin(), polys.end(), 0.0,
                                       [](double s, const Polygon& p) { return s + area(p); });
    TileGeometry t;
    t.extent = 400.0;
    t.clipped = polys;
    const auto r = rasterize(t, 800);  // half-meter pixels
    EXPECT_NEAR(total_coverage(r) * 0.25, sum, 0.02 * sum) << recipe.name;
  }
}

TEST(Synthetic, TilesAreDeterministicAndRoundRobin) {
  const auto spec = SyntheticSpec::two_class();
  const auto a = generate_synthetic(spec, 6, 99);
  const auto b = generate_synthetic(spec, 6, 99);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].recipe, i % 2);
    EXPECT_EQ(a[i].category.value(), spec.classes[i % 2].category);
    ASSERT_EQ(a[i].geometry.clipped.size(), b[i].geometry.clipped.size());
    EXPECT_EQ(a[i].geometry.clipped[0].exterior, b[i].geometry.clipped[0].exterior);
  }
}
