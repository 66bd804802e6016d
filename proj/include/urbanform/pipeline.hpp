#ifndef URBANFORM_PIPELINE_HPP
#define URBANFORM_PIPELINE_HPP

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "urbanform/config.hpp"
#include "urbanform/csv.hpp"
#include "urbanform/errors.hpp"
#include "urbanform/forest.hpp"
#include "urbanform/geodata.hpp"
#include "urbanform/image_io.hpp"
#include "urbanform/morpho.hpp"
#include "urbanform/parallel.hpp"
#include "urbanform/raster.hpp"
#include "urbanform/sampler.hpp"
#include "urbanform/synthetic.hpp"

namespace urbanform {

// A failure inside a named pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Every CSV artifact opens with a `# urbanform:<kind>/<version>` line.
inline constexpr std::string_view kSamplesSchema = "urbanform:samples/1";
inline constexpr std::string_view kFeaturesSchema = "urbanform:features/1";
inline constexpr std::string_view kTilesSchema = "urbanform:tiles/1";
inline constexpr std::string_view kPredictionsSchema = "urbanform:region-predictions/1";
inline constexpr std::string_view kAccuracySchema = "urbanform:accuracy/1";
inline constexpr std::string_view kConfusionSchema = "urbanform:confusion/1";
inline constexpr std::string_view kImportanceSchema = "urbanform:importance/1";

inline void check_schema(const csv::Document& doc, std::string_view expected, std::string_view what) {
  if (doc.comments.empty() || doc.comments.front() != " " + std::string(expected)) {
    const std::string found = doc.comments.empty() ? "none" : doc.comments.front();
    throw SchemaError(std::string(what) + ": expected schema '" + std::string(expected) + "', found '" + found + "'");
  }
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw InputError("cannot read " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// --- samples.csv -----------------------------------------------------------------

struct SampleRecord {
  SamplePoint point;
  Split split = Split::excluded;
};

inline void write_samples(std::ostream& os, std::span<const SampleRecord> records) {
  os << "# " << kSamplesSchema << '\n';
  os << "id,lon,lat,zip,category,split\n";
  for (const auto& r : records) {
    csv::write_row(os, {std::to_string(r.point.id), csv::format_double(r.point.lonlat.lon),
                        csv::format_double(r.point.lonlat.lat), r.point.zip.value_or(""),
                        r.point.category ? std::to_string(r.point.category->value()) : "",
                        std::string(to_string(r.split))});
  }
}

inline std::vector<SampleRecord> read_samples(std::string_view text, const std::optional<LocalProjection>& proj) {
  const auto doc = csv::parse(text);
  check_schema(doc, kSamplesSchema, "samples");
  const auto col = [&](std::string_view name) {
    const auto c = doc.column(name);
    if (!c) throw SchemaError("samples: missing column " + std::string(name));
    return *c;
  };
  const std::size_t id = col("id"), lon = col("lon"), lat = col("lat"), zip = col("zip"), cat = col("category"),
                    split = col("split");
  std::vector<SampleRecord> out;
  for (const auto& row : doc.rows) {
    if (row.size() != doc.header.size()) throw SchemaError("samples: ragged row");
    SampleRecord r;
    const auto id_v = csv::to_int(row[id]);
    const auto lon_v = csv::to_double(row[lon]);
    const auto lat_v = csv::to_double(row[lat]);
    const auto split_v = split_from_string(row[split]);
    if (!id_v || !lon_v || !lat_v || !split_v) throw SchemaError("samples: malformed row");
    r.point.id = static_cast<std::size_t>(*id_v);
    r.point.lonlat = {*lon_v, *lat_v};
    if (proj) r.point.location = proj->project(r.point.lonlat);
    if (!row[zip].empty()) r.point.zip = row[zip];
    if (!row[cat].empty()) {
      const auto c = csv::to_int(row[cat]);
      if (!c) throw SchemaError("samples: malformed category");
      r.point.category = IncomeCategory{static_cast<int>(*c)};
    }
    r.split = *split_v;
    out.push_back(std::move(r));
  }
  return out;
}

// --- features.csv ----------------------------------------------------------------

struct FeatureRow {
  std::size_t id = 0;
  std::optional<IncomeCategory> category;
  FeatureVector features;
};

inline void write_features(std::ostream& os, std::span<const FeatureRow> rows) {
  os << "# " << kFeaturesSchema << '\n';
  os << "id,category";
  for (const auto& n : feature_names()) os << ',' << n;
  os << '\n';
  for (const auto& r : rows) {
    os << r.id << ',' << (r.category ? std::to_string(r.category->value()) : "");
    for (const double v : r.features.flatten()) os << ',' << csv::format_double(v);
    os << '\n';
  }
}

inline std::vector<FeatureRow> read_features(std::string_view text) {
  const auto doc = csv::parse(text);
  check_schema(doc, kFeaturesSchema, "features");
  const auto names = feature_names();
  if (doc.header.size() != 2 + kFeatureDim || doc.header[0] != "id" || doc.header[1] != "category" ||
      !std::equal(names.begin(), names.end(), doc.header.begin() + 2)) {
    throw SchemaError("features: unexpected header");
  }
  std::vector<FeatureRow> out;
  for (const auto& row : doc.rows) {
    if (row.size() != doc.header.size()) throw SchemaError("features: ragged row");
    FeatureRow r;
    const auto id = csv::to_int(row[0]);
    if (!id) throw SchemaError("features: malformed id");
    r.id = static_cast<std::size_t>(*id);
    if (!row[1].empty()) {
      const auto c = csv::to_int(row[1]);
      if (!c) throw SchemaError("features: malformed category");
      r.category = IncomeCategory{static_cast<int>(*c)};
    }
    std::array<Histogram*, 4> blocks = {&r.features.direction, &r.features.density, &r.features.area,
                                        &r.features.complexity};
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      const auto v = csv::to_double(row[2 + j]);
      if (!v) throw SchemaError("features: malformed value");
      (*blocks[j / kBins])[j % kBins] = *v;
    }
    out.push_back(r);
  }
  return out;
}

// --- stages ---------------------------------------------------------------------

// Region data shared by all tiles.
struct Ingested {
  LocalProjection projection;
  FootprintIndex footprints;
  std::vector<ResidentialZone> zones;
  IncomeIndex income;
  std::size_t footprints_rejected = 0;
  std::size_t footprints_non_polygon = 0;
  std::size_t zones_rejected = 0;
  std::size_t zones_missing_code = 0;
};

inline Ingested ingest(const PipelineConfig& cfg) {
  const std::string fp_text = read_text(cfg.footprints);
  LonLat origin;
  if (cfg.origin) {
    origin = *cfg.origin;
  } else {
    const Box b = lonlat_bounds(fp_text);
    if (b.empty()) throw InputError("footprint file contains no polygon coordinates");
    origin = {(b.min_x + b.max_x) / 2, (b.min_y + b.max_y) / 2};
  }
  Ingested in;
  in.projection = LocalProjection(origin);
  auto fps = parse_footprints(fp_text, in.projection);
  in.footprints_rejected = fps.rejected;
  in.footprints_non_polygon = fps.non_polygon;
  in.footprints = FootprintIndex(std::move(fps.polygons));
  auto land = parse_landuse(read_text(cfg.landuse), cfg.residential_codes, in.projection, cfg.landuse_code_field);
  in.zones = std::move(land.zones);
  in.zones_rejected = land.rejected;
  in.zones_missing_code = land.missing_code;
  in.income = parse_income(read_text(cfg.income), read_text(cfg.zips), in.projection, cfg.zip_field);
  return in;
}

// Samples, labels and splits points for data mode.
inline std::vector<SampleRecord> sample_stage(const PipelineConfig& cfg, const Ingested& in) {
  SamplingParams sp;
  sp.n = cfg.n;
  sp.min_dist = cfg.min_dist;
  sp.seed = derive_seed(cfg.seed, "sample");
  const auto points = sample_points(in.zones, sp, in.projection);
  std::vector<SampleRecord> records;
  records.reserve(points.size());
  for (const auto& p : points) records.push_back({label_point(p, in.income), Split::excluded});
  return records;
}

inline void assign_splits(std::vector<SampleRecord>& records, std::size_t cap, const SplitRatios& ratios,
                          std::uint64_t master_seed) {
  std::vector<std::optional<IncomeCategory>> cats;
  cats.reserve(records.size());
  for (const auto& r : records) cats.push_back(r.point.category);
  const auto a = balance_and_split(cats, cap, ratios, derive_seed(master_seed, "split"));
  for (std::size_t i = 0; i < records.size(); ++i) records[i].split = a.split[i];
}

// Source of tile geometry for a sample: footprints of a region (data mode) or
// the synthetic generator.
class TileSource {
 public:
  static TileSource from_region(const Ingested& in, double extent) {
    TileSource s;
    s.make_ = [&in, extent](const SamplePoint& p) {
      return clip_tile(in.footprints, p, extent, tile_x_scale(in.projection, p.lonlat));
    };
    return s;
  }

  static TileSource from_synthetic(std::vector<SyntheticTile> tiles) {
    TileSource s;
    auto shared = std::make_shared<std::vector<SyntheticTile>>(std::move(tiles));
    s.make_ = [shared](const SamplePoint& p) {
      if (p.id >= shared->size()) throw InputError("synthetic tile id out of range");
      return (*shared)[p.id].geometry;
    };
    return s;
  }

  TileGeometry operator()(const SamplePoint& p) const { return make_(p); }

 private:
  std::function<TileGeometry(const SamplePoint&)> make_;
};

inline std::vector<FeatureRow> featurize_records(std::span<const SampleRecord> records, const TileSource& source,
                                                 int resolution, std::size_t workers) {
  std::vector<const SampleRecord*> kept;
  for (const auto& r : records) {
    if (r.split != Split::excluded) kept.push_back(&r);
  }
  std::vector<FeatureRow> rows(kept.size());
  parallel_for(kept.size(), workers, [&](std::size_t i) {
    const auto& p = kept[i]->point;
    const TileGeometry tile = source(p);
    rows[i] = {p.id, p.category, featurize(tile, rasterize(tile, resolution))};
  });
  return rows;
}

// Writes one image per kept sample and the sidecar index.
inline void export_tiles(std::span<const SampleRecord> records, const TileSource& source, int resolution,
                         const std::filesystem::path& dir, const std::string& format, std::size_t workers) {
  if (format != "pgm" && format != "png") throw InputError("tile format must be pgm or png");
  std::filesystem::create_directories(dir);
  std::vector<const SampleRecord*> kept;
  for (const auto& r : records) {
    if (r.split != Split::excluded) kept.push_back(&r);
  }
  std::vector<std::string> files(kept.size());
  parallel_for(kept.size(), workers, [&](std::size_t i) {
    const auto& p = kept[i]->point;
    const TileRaster raster = rasterize(source(p), resolution);
    files[i] = "tile_" + std::to_string(p.id) + "." + format;
    write_file((dir / files[i]).string(), format == "pgm" ? encode_pgm(raster) : encode_png(raster));
  });
  std::ofstream os(dir / "tiles.csv", std::ios::binary);
  os << "# " << kTilesSchema << '\n' << "id,category,split,lon,lat,file\n";
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& r = *kept[i];
    csv::write_row(os, {std::to_string(r.point.id), r.point.category ? std::to_string(r.point.category->value()) : "",
                        std::string(to_string(r.split)), csv::format_double(r.point.lonlat.lon),
                        csv::format_double(r.point.lonlat.lat), files[i]});
  }
}

struct LabeledSet {
  FeatureMatrix x;
  std::vector<int> y;
  std::vector<std::size_t> ids;
};

// Rows of `features` whose sample is in `split`, in features order.
inline LabeledSet select_split(std::span<const FeatureRow> features, std::span<const SampleRecord> records, Split split) {
  std::map<std::size_t, Split> split_of;
  for (const auto& r : records) split_of[r.point.id] = r.split;
  LabeledSet s;
  s.x = FeatureMatrix(0, kFeatureDim);
  for (const auto& f : features) {
    const auto it = split_of.find(f.id);
    if (it == split_of.end() || it->second != split || !f.category) continue;
    const auto flat = f.features.flatten();
    s.x.push_row(flat);
    s.y.push_back(f.category->value());
    s.ids.push_back(f.id);
  }
  return s;
}

inline ForestModel train_stage(const LabeledSet& train_set, const PipelineConfig& cfg) {
  ForestParams params = cfg.forest;
  params.seed = derive_seed(cfg.seed, "forest");
  params.workers = cfg.workers;
  const auto names = feature_names();
  return train(train_set.x, train_set.y, params, kNumCategories, {names.begin(), names.end()});
}

struct Evaluation {
  std::array<std::array<std::size_t, kNumCategories>, kNumCategories> confusion{};  // [truth][predicted]
  std::size_t total = 0;
  std::size_t correct = 0;

  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }

  std::size_t class_total(int c) const {
    std::size_t n = 0;
    for (const auto v : confusion[static_cast<std::size_t>(c)]) n += v;
    return n;
  }
};

inline Evaluation evaluate(const ForestModel& model, const LabeledSet& set) {
  Evaluation e;
  for (std::size_t i = 0; i < set.y.size(); ++i) {
    const int predicted = predict(model, set.x.row(i)).category;
    ++e.confusion[static_cast<std::size_t>(set.y[i])][static_cast<std::size_t>(predicted)];
  }
  for (int c = 0; c < kNumCategories; ++c) {
    for (int p = 0; p < kNumCategories; ++p) e.total += e.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(p)];
    e.correct += e.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
  }
  return e;
}

// --- reports --------------------------------------------------------------------

inline void write_accuracy(std::ostream& os, const Evaluation& e) {
  os << "# " << kAccuracySchema << '\n' << "category,income_range,n,correct,accuracy\n";
  for (int c = 0; c < kNumCategories; ++c) {
    const std::size_t n = e.class_total(c);
    if (n == 0) continue;
    const std::size_t ok = e.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    csv::write_row(os, {std::to_string(c), std::string(kIncomeRangeLabels[static_cast<std::size_t>(c)]),
                        std::to_string(n), std::to_string(ok),
                        csv::format_fixed(static_cast<double>(ok) / static_cast<double>(n), 6)});
  }
  csv::write_row(os, {"all", "", std::to_string(e.total), std::to_string(e.correct), csv::format_fixed(e.accuracy(), 6)});
}

inline void write_confusion(std::ostream& os, const Evaluation& e) {
  os << "# " << kConfusionSchema << '\n' << "truth";
  for (int p = 0; p < kNumCategories; ++p) os << ",pred" << p;
  os << '\n';
  for (int c = 0; c < kNumCategories; ++c) {
    os << c;
    for (int p = 0; p < kNumCategories; ++p) os << ',' << e.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(p)];
    os << '\n';
  }
}

inline void write_importance(std::ostream& os, const ImportanceReport& r, std::span<const std::string> names) {
  os << "# " << kImportanceSchema << '\n' << "feature,importance\n";
  for (std::size_t j = 0; j < r.per_dimension.size(); ++j) {
    os << names[j] << ',' << csv::format_double(r.per_dimension[j]) << '\n';
  }
}

// Four-family summary laid out as Density | Building size | Contour
// complexity | Directionality.
inline std::string importance_summary(const ImportanceReport& r) {
  std::ostringstream os;
  os << "Density\tBuilding size\tContour complexity\tDirectionality\n";
  os << csv::format_fixed(r.family(Family::density), 4) << '\t' << csv::format_fixed(r.family(Family::area), 4)
     << '\t' << csv::format_fixed(r.family(Family::complexity), 4) << '\t'
     << csv::format_fixed(r.family(Family::direction), 4) << '\n';
  return os.str();
}

struct RunReport {
  std::size_t samples = 0;
  std::size_t labeled = 0;
  std::size_t train_rows = 0;
  std::size_t val_rows = 0;
  std::size_t test_rows = 0;
  Evaluation validation;
  Evaluation test;
  double oob_error = 0.0;
  ImportanceReport importance;
  std::vector<std::string> warnings;
};

inline std::string render_report(const PipelineConfig& cfg, const RunReport& r) {
  std::ostringstream os;
  os << "urbanform run report (schema urbanform:report/1)\n";
  os << "mode: " << (cfg.mode == RunMode::data ? "data" : "synthetic") << "\n";
  os << "seed: " << cfg.seed << "\n";
  os << "tile: " << csv::format_double(cfg.extent) << " m at " << cfg.resolution << " px\n";
  os << "direction convention: theta = atan2(g_y, g_x) folded to [0, 180); vertical edges in bin 0, horizontal in bin 5\n";
  os << "samples: " << r.samples << " drawn, " << r.labeled << " labeled, " << r.train_rows << " train / "
     << r.val_rows << " val / " << r.test_rows << " test\n";
  const auto& p = cfg.forest;
  os << "forest: n_trees=" << p.n_trees << " features_per_split=" << p.features_per_split
     << " max_depth=" << (p.max_depth ? std::to_string(p.max_depth) : "unlimited")
     << " min_samples_leaf=" << p.min_samples_leaf << "\n";
  os << "test accuracy: " << csv::format_fixed(r.test.accuracy(), 6) << " (" << r.test.correct << "/" << r.test.total
     << ")\n";
  os << "validation accuracy: " << csv::format_fixed(r.validation.accuracy(), 6) << " (" << r.validation.correct
     << "/" << r.validation.total << ")\n";
  os << "oob error: " << csv::format_fixed(r.oob_error, 6) << "\n\n";
  os << "prediction accuracy within each category (test)\n";
  for (int c = 0; c < kNumCategories; ++c) {
    const auto n = r.test.class_total(c);
    if (n == 0) continue;
    const auto ok = r.test.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    os << "  " << c << "  " << kIncomeRangeLabels[static_cast<std::size_t>(c)] << ": "
       << csv::format_fixed(100.0 * static_cast<double>(ok) / static_cast<double>(n), 2) << "% (" << ok << "/" << n
       << ")\n";
  }
  os << "\nimportance by feature family\n" << importance_summary(r.importance);
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
  return os.str();
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

template <typename F>
auto run_stage(const std::string& stage, const std::filesystem::path& status, F&& body) {
  write_text(status, "running: " + stage + "\n");
  try {
    return body();
  } catch (const std::exception& e) {
    write_text(status, "stale: stage " + stage + " failed: " + e.what() + "\n");
    throw StageError(stage, e.what());
  }
}

}  // namespace detail

// Train on the train split, evaluate on val/test, compute importances and
// write every report file into `out`.
inline RunReport train_and_report(const PipelineConfig& cfg, std::span<const FeatureRow> features,
                                  std::span<const SampleRecord> records, const std::filesystem::path& out,
                                  RunReport report = {}) {
  const auto status = out / "run.status";
  const auto train_set = select_split(features, records, Split::train);
  const auto val_set = select_split(features, records, Split::val);
  const auto test_set = select_split(features, records, Split::test);
  report.train_rows = train_set.y.size();
  report.val_rows = val_set.y.size();
  report.test_rows = test_set.y.size();

  const auto model = detail::run_stage("train", status, [&] {
    if (train_set.y.empty()) throw InputError("train split is empty");
    auto m = train_stage(train_set, cfg);
    detail::write_text(out / "model.txt", save_model(m));
    return m;
  });
  for (const auto& w : model.warnings) report.warnings.push_back(w);

  detail::run_stage("report", status, [&] {
    report.validation = evaluate(model, val_set);
    report.test = evaluate(model, test_set);
    report.oob_error = oob_error(model, train_set.x, train_set.y);
    report.importance = permutation_importance(model, train_set.x, train_set.y, derive_seed(cfg.seed, "importance"));
    std::ostringstream acc, conf, imp;
    write_accuracy(acc, report.test);
    write_confusion(conf, report.test);
    write_importance(imp, report.importance, model.feature_names);
    detail::write_text(out / "accuracy.csv", acc.str());
    detail::write_text(out / "confusion.csv", conf.str());
    detail::write_text(out / "importance.csv", imp.str());
    detail::write_text(out / "importance_summary.txt", importance_summary(report.importance));
    detail::write_text(out / "report.txt", render_report(cfg, report));
    return 0;
  });
  return report;
}

inline std::vector<SyntheticTile> synthetic_tiles(const PipelineConfig& cfg) {
  const auto spec = SyntheticSpec::two_class();
  return generate_synthetic(spec, cfg.synthetic_tiles_per_class * spec.classes.size(),
                            derive_seed(cfg.seed, "synthetic"), cfg.extent);
}

inline std::vector<SampleRecord> synthetic_records(std::span<const SyntheticTile> tiles) {
  std::vector<SampleRecord> records;
  records.reserve(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    SampleRecord r;
    r.point.id = i;
    r.point.zip = "synthetic";
    r.point.category = tiles[i].category;
    records.push_back(std::move(r));
  }
  return records;
}

// ingest -> sample -> rasterize -> featurize -> split -> train -> evaluate.
// Every artifact lands in cfg.output; run.status reads "complete" on success
// and names the failed stage otherwise.
inline RunReport run_pipeline(const PipelineConfig& cfg) {
  try {
    validate(cfg);
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
  const auto& out = cfg.output;
  std::filesystem::create_directories(out);
  const auto status = out / "run.status";

  RunReport report;
  std::vector<SampleRecord> records;
  std::optional<Ingested> ingested;
  std::optional<TileSource> source;

  if (cfg.mode == RunMode::data) {
    ingested.emplace(detail::run_stage("ingest", status, [&] { return ingest(cfg); }));
    records = detail::run_stage("sample", status, [&] { return sample_stage(cfg, *ingested); });
    if (records.size() < cfg.n) {
      report.warnings.push_back("sampler stopped at " + std::to_string(records.size()) + " of " +
                                std::to_string(cfg.n) + " points (zones saturated at min_dist)");
    }
    source = TileSource::from_region(*ingested, cfg.extent);
  } else {
    auto tiles = detail::run_stage("synth", status, [&] { return synthetic_tiles(cfg); });
    records = synthetic_records(tiles);
    source = TileSource::from_synthetic(std::move(tiles));
  }
  report.samples = records.size();
  report.labeled = static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const SampleRecord& r) { return r.point.category.has_value(); }));

  detail::run_stage("split", status, [&] {
    assign_splits(records, cfg.cap, cfg.ratios, cfg.seed);
    std::ostringstream os;
    write_samples(os, records);
    detail::write_text(out / "samples.csv", os.str());
    return 0;
  });
  if (cfg.image_format != "none") {
    detail::run_stage("rasterize", status, [&] {
      export_tiles(records, *source, cfg.resolution, out / "tiles", cfg.image_format, cfg.workers);
      return 0;
    });
  }
  const auto features = detail::run_stage("featurize", status, [&] {
    auto rows = featurize_records(records, *source, cfg.resolution, cfg.workers);
    std::ostringstream os;
    write_features(os, rows);
    detail::write_text(out / "features.csv", os.str());
    return rows;
  });

  report = train_and_report(cfg, features, records, out, report);
  detail::write_text(status, "complete\n");
  return report;
}

// --- region prediction -------------------------------------------------------------

struct RegionPrediction {
  SamplePoint point;
  int category = 0;
  double margin = 0.0;         // (top votes - runner-up votes) / n_trees
  bool low_confidence = false; // tile held no buildings
};

// Lattice of query points with `step` spacing covering `box` in the region frame.
inline std::vector<SamplePoint> grid_points(const Box& box, double step, const LocalProjection& proj) {
  if (!(step > 0.0)) throw InputError("grid step must be positive");
  std::vector<SamplePoint> out;
  for (double y = box.min_y; y <= box.max_y + 1e-9; y += step) {
    for (double x = box.min_x; x <= box.max_x + 1e-9; x += step) {
      SamplePoint p;
      p.id = out.size();
      p.location = {x, y};
      p.lonlat = proj.unproject(p.location);
      out.push_back(p);
    }
  }
  return out;
}

inline std::vector<RegionPrediction> predict_region(const ForestModel& model, const FootprintIndex& footprints,
                                                    std::span<const SamplePoint> points, const LocalProjection& proj,
                                                    double extent = kDefaultExtent, int resolution = kDefaultResolution,
                                                    std::size_t workers = 0) {
  std::vector<RegionPrediction> out(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) {
    const auto tile = clip_tile(footprints, points[i], extent, tile_x_scale(proj, points[i].lonlat));
    const auto fv = featurize(tile, rasterize(tile, resolution)).flatten();
    const auto pred = predict(model, fv);
    auto votes = pred.votes;
    std::sort(votes.begin(), votes.end(), std::greater<>());
    const double margin = votes.size() > 1 ? static_cast<double>(votes[0] - votes[1]) : static_cast<double>(votes[0]);
    out[i] = {points[i], pred.category, margin / static_cast<double>(model.trees.size()), tile.empty()};
  });
  return out;
}

inline void write_region_predictions(std::ostream& os, std::span<const RegionPrediction> rows) {
  os << "# " << kPredictionsSchema << '\n' << "id,lon,lat,x,y,category,margin,low_confidence\n";
  for (const auto& r : rows) {
    csv::write_row(os, {std::to_string(r.point.id), csv::format_double(r.point.lonlat.lon),
                        csv::format_double(r.point.lonlat.lat), csv::format_fixed(r.point.location.x, 3),
                        csv::format_fixed(r.point.location.y, 3), std::to_string(r.category),
                        csv::format_fixed(r.margin, 6), r.low_confidence ? "1" : "0"});
  }
}

}  // namespace urbanform

#endif  // URBANFORM_PIPELINE_HPP
