#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "urbanform/pipeline.hpp"

using namespace urbanform;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("urbanform_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Writes the synthetic town as data-mode inputs and returns a config for it.
PipelineConfig town_config(const fs::path& dir, std::uint64_t seed = 42) {
  const LocalProjection proj({-71.06, 42.36});
  const auto town = generate_town(SyntheticSpec::two_class(), seed, proj);
  detail::write_text(dir / "footprints.geojson", town.footprints_geojson);
  detail::write_text(dir / "landuse.geojson", town.landuse_geojson);
  detail::write_text(dir / "zips.geojson", town.zips_geojson);
  detail::write_text(dir / "income.csv", town.income_csv);
  PipelineConfig cfg = parse_config(
      "mode = data\n"
      "footprints = footprints.geojson\n"
      "landuse = landuse.geojson\n"
      "zips = zips.geojson\n"
      "income = income.csv\n"
      "residential_codes = R1, R2\n"
      "n = 300\n"
      "n_trees = 60\n"
      "image_format = png\n",
      dir);
  cfg.output = dir / "out";
  return cfg;
}

}  // namespace

TEST(Config, ParsesKeysAndResolvesPaths) {
  const auto cfg = parse_config(
      "# comment\n"
      "mode = synthetic\n"
      "seed = 18446744073709551615\n"
      "min_dist = 75.5   # trailing comment\n"
      "ratios = 0.8, 0.1, 0.1\n"
      "footprints = a/b.geojson\n"
      "n_trees = 9\n",
      "/data");
  EXPECT_EQ(cfg.mode, RunMode::synthetic);
  EXPECT_EQ(cfg.seed, 18446744073709551615ull);
  EXPECT_EQ(cfg.min_dist, 75.5);
  EXPECT_EQ(cfg.ratios.train, 0.8);
  EXPECT_EQ(cfg.footprints, fs::path("/data/a/b.geojson"));
  EXPECT_EQ(cfg.forest.n_trees, 9u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config("colour = blue\n"), InputError);
  EXPECT_THROW(parse_config("n = -4\n"), InputError);
  EXPECT_THROW(parse_config("n = 4.5\n"), InputError);
  EXPECT_THROW(parse_config("mode = other\n"), InputError);
  EXPECT_THROW(parse_config("just text\n"), InputError);
}

TEST(Config, ValidationFailsFastOnMissingInputs) {
  PipelineConfig cfg;
  EXPECT_THROW(validate(cfg), InputError);
  cfg.mode = RunMode::synthetic;
  EXPECT_NO_THROW(validate(cfg));
  cfg.resolution = 100;
  EXPECT_THROW(validate(cfg), InputError);
}

TEST(Artifacts, SamplesRoundTrip) {
  std::vector<SampleRecord> recs(2);
  recs[0].point.id = 3;
  recs[0].point.lonlat = {-71.123456789012345, 42.1};
  recs[0].point.zip = "02139";
  recs[0].point.category = IncomeCategory{5};
  recs[0].split = Split::val;
  recs[1].point.id = 4;
  std::ostringstream os;
  write_samples(os, recs);
  const auto back = read_samples(os.str(), std::nullopt);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].point.lonlat.lon, recs[0].point.lonlat.lon);
  EXPECT_EQ(*back[0].point.zip, "02139");
  EXPECT_EQ(back[0].point.category->value(), 5);
  EXPECT_EQ(back[0].split, Split::val);
  EXPECT_FALSE(back[1].point.category.has_value());
  EXPECT_EQ(back[1].split, Split::excluded);
}

TEST(Artifacts, FeaturesRoundTripAndSchemaCheck) {
  FeatureRow r;
  r.id = 7;
  r.category = IncomeCategory{2};
  r.features.density[0] = 1.0 / 3.0;
  r.features.complexity[9] = 0.125;
  std::ostringstream os;
  const std::vector<FeatureRow> rows{r};
  write_features(os, rows);
  const auto back = read_features(os.str());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].features, r.features);
  std::string wrong = os.str();
  wrong.replace(wrong.find("features/1"), 10, "features/2");
  EXPECT_THROW(read_features(wrong), SchemaError);
  EXPECT_THROW(read_samples(os.str(), std::nullopt), SchemaError);
}

TEST(Pipeline, SyntheticTownEndToEnd) {
  const auto dir = scratch("town");
  const auto cfg = town_config(dir);
  const auto report = run_pipeline(cfg);
  EXPECT_GT(report.samples, 100u);
  EXPECT_EQ(report.samples, report.labeled);
  EXPECT_GT(report.test.total, 0u);
  EXPECT_GE(report.test.accuracy(), 0.9);
  EXPECT_EQ(read_text(cfg.output / "run.status"), "complete\n");
  for (const char* f : {"samples.csv", "features.csv", "model.txt", "accuracy.csv", "confusion.csv", "importance.csv",
                        "importance_summary.txt", "report.txt", "tiles/tiles.csv"}) {
    EXPECT_TRUE(fs::exists(cfg.output / f)) << f;
  }
  // The sidecar lists one image per kept sample.
  const auto tiles = csv::parse(read_text(cfg.output / "tiles" / "tiles.csv"));
  check_schema(tiles, kTilesSchema, "tiles");
  ASSERT_FALSE(tiles.rows.empty());
  EXPECT_TRUE(fs::exists(cfg.output / "tiles" / tiles.rows[0][5]));

  // Points were drawn only inside the two residential zones, which carry
  // categories 1 (20k) and 7 (180k).
  const auto samples = read_samples(read_text(cfg.output / "samples.csv"), std::nullopt);
  for (const auto& s : samples) {
    ASSERT_TRUE(s.point.category.has_value());
    EXPECT_TRUE(s.point.category->value() == 1 || s.point.category->value() == 7);
  }
}

TEST(Pipeline, SameSeedGivesByteIdenticalReports) {
  const auto a_dir = scratch("det_a");
  const auto b_dir = scratch("det_b");
  auto a = town_config(a_dir);
  auto b = town_config(b_dir);
  a.image_format = b.image_format = "none";
  run_pipeline(a);
  b.workers = 3;
  run_pipeline(b);
  for (const char* f : {"samples.csv", "features.csv", "model.txt", "accuracy.csv", "confusion.csv", "importance.csv",
                        "report.txt"}) {
    EXPECT_EQ(read_text(a.output / f), read_text(b.output / f)) << f;
  }
}

TEST(Pipeline, FailedStageIsNamedAndMarkedStale) {
  const auto dir = scratch("stale");
  auto cfg = town_config(dir);
  detail::write_text(dir / "landuse.geojson", "{\"type\": \"FeatureCollection\", \"features\": [");
  try {
    run_pipeline(cfg);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "ingest");
  }
  EXPECT_EQ(read_text(cfg.output / "run.status").rfind("stale: stage ingest", 0), 0u);
}

TEST(Pipeline, ConfigErrorsSurfaceBeforeWork) {
  PipelineConfig cfg;
  cfg.output = scratch("cfg") / "out";
  try {
    run_pipeline(cfg);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
  EXPECT_FALSE(fs::exists(cfg.output));
}

TEST(Pipeline, RegionPredictionCoversTheTown) {
  const auto dir = scratch("region");
  auto cfg = town_config(dir);
  cfg.image_format = "none";
  run_pipeline(cfg);
  const auto model = load_model(read_text(cfg.output / "model.txt"));
  const auto in = ingest(cfg);
  // One point in the middle of each neighborhood; the town starts at its
  // south-west corner, projected relative to the footprint bounds center.
  const LocalProjection gen({-71.06, 42.36});
  std::vector<SamplePoint> pts(2);
  pts[0].lonlat = gen.unproject({500, 500});
  pts[1].lonlat = gen.unproject({1600, 500});
  for (auto& p : pts) p.location = in.projection.project(p.lonlat);
  const auto rows = predict_region(model, in.footprints, pts, in.projection);
  EXPECT_EQ(rows[0].category, 1);
  EXPECT_EQ(rows[1].category, 7);
  EXPECT_FALSE(rows[0].low_confidence);
  std::ostringstream os;
  write_region_predictions(os, rows);
  check_schema(csv::parse(os.str()), kPredictionsSchema, "predictions");
}

TEST(Pipeline, SyntheticModeRunsSmall) {
  PipelineConfig cfg;
  cfg.mode = RunMode::synthetic;
  cfg.synthetic_tiles_per_class = 60;
  cfg.forest.n_trees = 30;
  cfg.image_format = "none";
  cfg.output = scratch("synthetic") / "out";
  const auto r = run_pipeline(cfg);
  EXPECT_EQ(r.samples, 120u);
  EXPECT_GE(r.test.accuracy(), 0.9);
}

TEST(SyntheticRecipes, FeatureSignaturesMatchTheRecipes) {
  const auto spec = SyntheticSpec::two_class();
  const auto tiles = generate_synthetic(spec, 40, 2024);
  for (const auto& t : tiles) {
    const auto f = featurize(t.geometry, rasterize(t.geometry));
    if (t.recipe == 0) {
      // Small street-aligned rectangles: all area mass below 100 m2.
      EXPECT_NEAR(f.area[0] + f.area[1], 1.0, 1e-12);
    } else {
      // L and cross outlines always score above 6.
      EXPECT_EQ(f.complexity[0], 0.0);
      EXPECT_NEAR(f.complexity[1] + f.complexity[2] + f.complexity[3], 1.0, 1e-12);
    }
  }
  EXPECT_TRUE(generate_synthetic(spec, 0, 1).empty());
}

TEST(SyntheticRecipes, AnalyticComplexityOfTemplates) {
  for (const double arm : {0.28, 0.34}) {
    EXPECT_GT(contour_complexity(l_building(250.0, arm)), 6.0);
    EXPECT_GT(contour_complexity(cross_building(250.0, arm)), 6.0);
  }
}

TEST(Pipeline, AccuracyIsConfusionTraceOverTotal) {
  PipelineConfig cfg;
  cfg.mode = RunMode::synthetic;
  cfg.synthetic_tiles_per_class = 40;
  cfg.forest.n_trees = 15;
  cfg.image_format = "none";
  cfg.output = scratch("trace") / "out";
  const auto r = run_pipeline(cfg);
  std::size_t trace = 0, total = 0;
  for (int c = 0; c < kNumCategories; ++c) {
    for (int p = 0; p < kNumCategories; ++p) total += r.test.confusion[c][p];
    trace += r.test.confusion[c][c];
  }
  EXPECT_EQ(r.test.accuracy(), static_cast<double>(trace) / static_cast<double>(total));
  const auto acc = csv::parse(read_text(cfg.output / "accuracy.csv"));
  EXPECT_EQ(acc.rows.back()[0], "all");
  EXPECT_EQ(acc.rows.back()[2], std::to_string(total));
  EXPECT_EQ(acc.rows.back()[3], std::to_string(trace));
}

TEST(Pipeline, RegionGridAndEmptyTiles) {
  const auto dir = scratch("grid");
  auto cfg = town_config(dir);
  cfg.image_format = "none";
  run_pipeline(cfg);
  const auto model = load_model(read_text(cfg.output / "model.txt"));
  const auto in = ingest(cfg);
  const LocalProjection gen({-71.06, 42.36});
  // Lattice over the interior of the dense neighborhood, kept 150 m from its edges.
  const Point sw = in.projection.project(gen.unproject({150, 150}));
  const Point ne = in.projection.project(gen.unproject({850, 850}));
  const auto pts = grid_points(Box{sw.x, sw.y, ne.x, ne.y}, 175.0, in.projection);
  ASSERT_GE(pts.size(), 16u);
  for (const auto& row : predict_region(model, in.footprints, pts, in.projection)) {
    EXPECT_EQ(row.category, 1);
    EXPECT_FALSE(row.low_confidence);
  }
  // One point far from any building.
  std::vector<SamplePoint> lone(1);
  lone[0].lonlat = gen.unproject({5000, 5000});
  lone[0].location = in.projection.project(lone[0].lonlat);
  const auto rows = predict_region(model, in.footprints, lone, in.projection);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].low_confidence);
}
