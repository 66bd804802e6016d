// urbanform: command line driver for the morphology pipeline.
//
// Every subcommand reads the same config file; flags override single keys.
// Stage artifacts live in the config's output directory so stages can be run
// one at a time or all at once with `run`.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "urbanform/urbanform.hpp"

namespace fs = std::filesystem;
using namespace urbanform;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> output;
};

PipelineConfig load(const Overrides& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) {
    cfg.workers = *o.workers;
    cfg.forest.workers = *o.workers;
  }
  if (o.output) cfg.output = *o.output;
  return cfg;
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config,-c", o.config, "pipeline config file");
  sub->add_option("--seed", o.seed, "master seed override");
  sub->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  sub->add_option("--out,-o", o.output, "output directory override");
}

std::string slurp(const fs::path& p) { return read_text(p); }

void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  detail::write_text(p, text);
}

std::vector<SampleRecord> load_samples(const fs::path& p, const std::optional<LocalProjection>& proj) {
  return read_samples(slurp(p), proj);
}

// Rebuilds the geometry source a samples file was drawn from.
struct Source {
  std::optional<Ingested> ingested;
  std::optional<TileSource> tiles;
};

void open_source(const PipelineConfig& cfg, Source& s) {
  if (cfg.mode == RunMode::data) {
    s.ingested.emplace(ingest(cfg));
    s.tiles = TileSource::from_region(*s.ingested, cfg.extent);
  } else {
    s.tiles = TileSource::from_synthetic(synthetic_tiles(cfg));
  }
}

std::optional<LocalProjection> projection_of(const Source& s) {
  if (s.ingested) return s.ingested->projection;
  return std::nullopt;
}

template <typename F>
int guarded(const std::string& stage, F&& body) {
  try {
    body();
    return 0;
  } catch (const StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"urbanform: urban morphology features and random-forest income classification"};
  app.require_subcommand(1);
  Overrides o;

  // ingest ---------------------------------------------------------------------
  auto* ingest_cmd = app.add_subcommand("ingest", "parse and validate vector inputs, print a summary");
  add_common(ingest_cmd, o);

  // sample ---------------------------------------------------------------------
  std::optional<std::size_t> n_opt, cap_opt;
  std::optional<double> min_dist_opt;
  auto* sample_cmd = app.add_subcommand("sample", "draw, label and split sample points -> samples.csv");
  add_common(sample_cmd, o);
  sample_cmd->add_option("--n", n_opt, "number of points");
  sample_cmd->add_option("--min-dist", min_dist_opt, "minimum separation in meters");
  sample_cmd->add_option("--cap", cap_opt, "per-category cap");

  // split ----------------------------------------------------------------------
  auto* split_cmd = app.add_subcommand("split", "rebalance and resplit an existing samples.csv");
  add_common(split_cmd, o);
  split_cmd->add_option("--cap", cap_opt, "per-category cap");

  // rasterize ------------------------------------------------------------------
  std::string tiles_out, format = "pgm";
  auto* raster_cmd = app.add_subcommand("rasterize", "export tile images and the tiles.csv sidecar");
  add_common(raster_cmd, o);
  raster_cmd->add_option("--tiles-out", tiles_out, "tile directory (default <out>/tiles)");
  raster_cmd->add_option("--format", format, "pgm or png")->check(CLI::IsMember({"pgm", "png"}));

  // featurize ------------------------------------------------------------------
  std::string samples_in, features_path;
  auto* feat_cmd = app.add_subcommand("featurize", "compute 40-d morphology vectors -> features.csv");
  add_common(feat_cmd, o);
  feat_cmd->add_option("--tiles,--samples", samples_in, "samples.csv to featurize (default <out>/samples.csv)");
  feat_cmd->add_option("--features-out", features_path, "output CSV (default <out>/features.csv)");

  // train-rf -------------------------------------------------------------------
  std::optional<std::size_t> trees_opt, mtry_opt, depth_opt, leaf_opt;
  auto* train_cmd = app.add_subcommand("train-rf", "train the forest and write model plus reports");
  add_common(train_cmd, o);
  train_cmd->add_option("--features", features_path, "features.csv (default <out>/features.csv)");
  train_cmd->add_option("--samples", samples_in, "samples.csv (default <out>/samples.csv)");
  train_cmd->add_option("--n-trees", trees_opt);
  train_cmd->add_option("--features-per-split", mtry_opt);
  train_cmd->add_option("--max-depth", depth_opt, "0 = unlimited");
  train_cmd->add_option("--min-samples-leaf", leaf_opt);

  // importance -----------------------------------------------------------------
  std::string model_path;
  auto* imp_cmd = app.add_subcommand("importance", "permutation importance of a saved model");
  add_common(imp_cmd, o);
  imp_cmd->add_option("--model", model_path, "model file (default <out>/model.txt)");
  imp_cmd->add_option("--features", features_path);
  imp_cmd->add_option("--samples", samples_in);

  // report ---------------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "evaluate a saved model and print the run report");
  add_common(report_cmd, o);
  report_cmd->add_option("--model", model_path);
  report_cmd->add_option("--features", features_path);
  report_cmd->add_option("--samples", samples_in);

  // predict-region ---------------------------------------------------------------
  double step = 200.0;
  std::string predictions_path;
  auto* pred_cmd = app.add_subcommand("predict-region", "classify a lattice of tiles over the footprint extent");
  add_common(pred_cmd, o);
  pred_cmd->add_option("--model", model_path);
  pred_cmd->add_option("--step", step, "lattice spacing in meters");
  pred_cmd->add_option("--predictions-out", predictions_path, "default <out>/region_predictions.csv");

  // synth ----------------------------------------------------------------------
  std::string town_dir;
  double origin_lon = -71.06, origin_lat = 42.36;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic two-neighborhood town as data-mode inputs");
  add_common(synth_cmd, o);
  synth_cmd->add_option("--town-out", town_dir, "directory for GeoJSON, CSV and config")->required();
  synth_cmd->add_option("--lon", origin_lon);
  synth_cmd->add_option("--lat", origin_lat);

  // run ------------------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "run the full pipeline");
  add_common(run_cmd, o);

  CLI11_PARSE(app, argc, argv);

  auto out_path = [&](const PipelineConfig& cfg, const std::string& given, const char* name) {
    return given.empty() ? cfg.output / name : fs::path(given);
  };

  if (*ingest_cmd) {
    return guarded("ingest", [&] {
      const auto cfg = load(o);
      validate(cfg);
      if (cfg.mode != RunMode::data) throw InputError("ingest needs mode = data");
      const auto in = ingest(cfg);
      const auto st = in.income.stats();
      std::cout << "origin: " << in.projection.origin().lon << ", " << in.projection.origin().lat << "\n"
                << "footprints: " << in.footprints.size() << " kept, " << in.footprints_rejected << " invalid, "
                << in.footprints_non_polygon << " non-polygon\n"
                << "residential zones: " << in.zones.size() << " kept, " << in.zones_rejected << " invalid, "
                << in.zones_missing_code << " without code\n"
                << "income: " << st.rows_rejected << " rows rejected, " << st.duplicate_zips << " duplicate zips, "
                << st.zips_without_polygon << " zips without polygon, " << st.polygons_without_income
                << " zip polygons without income, " << st.polygons_rejected << " zip polygons invalid\n";
    });
  }

  if (*sample_cmd) {
    return guarded("sample", [&] {
      auto cfg = load(o);
      if (n_opt) cfg.n = *n_opt;
      if (min_dist_opt) cfg.min_dist = *min_dist_opt;
      if (cap_opt) cfg.cap = *cap_opt;
      validate(cfg);
      std::vector<SampleRecord> records;
      if (cfg.mode == RunMode::data) {
        const auto in = ingest(cfg);
        records = sample_stage(cfg, in);
      } else {
        records = synthetic_records(synthetic_tiles(cfg));
      }
      if (records.size() < cfg.n && cfg.mode == RunMode::data) {
        std::cerr << "warning: sampler stopped at " << records.size() << " of " << cfg.n << " points\n";
      }
      assign_splits(records, cfg.cap, cfg.ratios, cfg.seed);
      std::ostringstream os;
      write_samples(os, records);
      spit(cfg.output / "samples.csv", os.str());
      std::cout << records.size() << " samples -> " << (cfg.output / "samples.csv").string() << "\n";
    });
  }

  if (*split_cmd) {
    return guarded("split", [&] {
      auto cfg = load(o);
      if (cap_opt) cfg.cap = *cap_opt;
      validate(cfg);
      auto records = load_samples(cfg.output / "samples.csv", std::nullopt);
      assign_splits(records, cfg.cap, cfg.ratios, cfg.seed);
      std::ostringstream os;
      write_samples(os, records);
      spit(cfg.output / "samples.csv", os.str());
    });
  }

  if (*raster_cmd) {
    return guarded("rasterize", [&] {
      const auto cfg = load(o);
      validate(cfg);
      Source s;
      open_source(cfg, s);
      const auto records = load_samples(cfg.output / "samples.csv", projection_of(s));
      const fs::path dir = tiles_out.empty() ? cfg.output / "tiles" : fs::path(tiles_out);
      export_tiles(records, *s.tiles, cfg.resolution, dir, format, cfg.workers);
      std::cout << "tiles -> " << dir.string() << "\n";
    });
  }

  if (*feat_cmd) {
    return guarded("featurize", [&] {
      const auto cfg = load(o);
      validate(cfg);
      Source s;
      open_source(cfg, s);
      const auto records = load_samples(out_path(cfg, samples_in, "samples.csv"), projection_of(s));
      const auto rows = featurize_records(records, *s.tiles, cfg.resolution, cfg.workers);
      std::ostringstream os;
      write_features(os, rows);
      const auto dest = out_path(cfg, features_path, "features.csv");
      spit(dest, os.str());
      std::cout << rows.size() << " feature rows -> " << dest.string() << "\n";
    });
  }

  if (*train_cmd) {
    return guarded("train", [&] {
      auto cfg = load(o);
      if (trees_opt) cfg.forest.n_trees = *trees_opt;
      if (mtry_opt) cfg.forest.features_per_split = *mtry_opt;
      if (depth_opt) cfg.forest.max_depth = *depth_opt;
      if (leaf_opt) cfg.forest.min_samples_leaf = *leaf_opt;
      validate(cfg);
      const auto records = load_samples(out_path(cfg, samples_in, "samples.csv"), std::nullopt);
      const auto features = read_features(slurp(out_path(cfg, features_path, "features.csv")));
      fs::create_directories(cfg.output);
      RunReport r;
      r.samples = records.size();
      for (const auto& rec : records) r.labeled += rec.point.category ? 1 : 0;
      r = train_and_report(cfg, features, records, cfg.output, r);
      std::cout << render_report(cfg, r);
    });
  }

  auto load_eval_inputs = [&](const PipelineConfig& cfg) {
    const auto model = load_model(slurp(out_path(cfg, model_path, "model.txt")));
    const auto records = load_samples(out_path(cfg, samples_in, "samples.csv"), std::nullopt);
    const auto features = read_features(slurp(out_path(cfg, features_path, "features.csv")));
    return std::make_tuple(model, records, features);
  };

  if (*imp_cmd) {
    return guarded("importance", [&] {
      const auto cfg = load(o);
      const auto [model, records, features] = load_eval_inputs(cfg);
      const auto train_set = select_split(features, records, Split::train);
      const auto imp = permutation_importance(model, train_set.x, train_set.y, derive_seed(cfg.seed, "importance"));
      std::ostringstream os;
      write_importance(os, imp, model.feature_names);
      spit(cfg.output / "importance.csv", os.str());
      spit(cfg.output / "importance_summary.txt", importance_summary(imp));
      std::cout << importance_summary(imp);
    });
  }

  if (*report_cmd) {
    return guarded("report", [&] {
      const auto cfg = load(o);
      const auto [model, records, features] = load_eval_inputs(cfg);
      const auto train_set = select_split(features, records, Split::train);
      RunReport r;
      r.samples = records.size();
      for (const auto& rec : records) r.labeled += rec.point.category ? 1 : 0;
      r.train_rows = train_set.y.size();
      r.validation = evaluate(model, select_split(features, records, Split::val));
      const auto test_set = select_split(features, records, Split::test);
      r.test = evaluate(model, test_set);
      r.val_rows = r.validation.total;
      r.test_rows = r.test.total;
      r.oob_error = oob_error(model, train_set.x, train_set.y);
      r.importance = permutation_importance(model, train_set.x, train_set.y, derive_seed(cfg.seed, "importance"));
      r.warnings = model.warnings;
      std::cout << render_report(cfg, r);
    });
  }

  if (*pred_cmd) {
    return guarded("predict-region", [&] {
      const auto cfg = load(o);
      validate(cfg);
      if (cfg.mode != RunMode::data) throw InputError("predict-region needs mode = data");
      const auto model = load_model(slurp(out_path(cfg, model_path, "model.txt")));
      const auto in = ingest(cfg);
      Box extent_box;
      for (std::size_t i = 0; i < in.footprints.size(); ++i) extent_box.expand(bounds(in.footprints[i].shape.exterior));
      const auto points = grid_points(extent_box, step, in.projection);
      const auto rows = predict_region(model, in.footprints, points, in.projection, cfg.extent, cfg.resolution, cfg.workers);
      std::ostringstream os;
      write_region_predictions(os, rows);
      const auto dest = out_path(cfg, predictions_path, "region_predictions.csv");
      spit(dest, os.str());
      std::cout << rows.size() << " predictions -> " << dest.string() << "\n";
    });
  }

  if (*synth_cmd) {
    return guarded("synth", [&] {
      const auto cfg = load(o);
      const LocalProjection proj({origin_lon, origin_lat});
      const auto town = generate_town(SyntheticSpec::two_class(), derive_seed(cfg.seed, "town"), proj);
      const fs::path dir = town_dir;
      spit(dir / "footprints.geojson", town.footprints_geojson);
      spit(dir / "landuse.geojson", town.landuse_geojson);
      spit(dir / "zips.geojson", town.zips_geojson);
      spit(dir / "income.csv", town.income_csv);
      spit(dir / "town.conf",
           "mode = data\n"
           "footprints = footprints.geojson\n"
           "landuse = landuse.geojson\n"
           "zips = zips.geojson\n"
           "income = income.csv\n"
           "residential_codes = R1, R2\n"
           "n = 1000\n"
           "seed = " + std::to_string(cfg.seed) + "\n"
           "output = out\n");
      std::cout << town.footprints.size() << " footprints -> " << dir.string() << "\n";
    });
  }

  if (*run_cmd) {
    return guarded("run", [&] {
      const auto cfg = load(o);
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = run_pipeline(cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << render_report(cfg, r);
      std::fprintf(stderr, "elapsed: %.1f s\n", secs);
    });
  }
  return 0;
}
