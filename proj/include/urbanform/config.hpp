#ifndef URBANFORM_CONFIG_HPP
#define URBANFORM_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "urbanform/csv.hpp"
#include "urbanform/errors.hpp"
#include "urbanform/forest.hpp"
#include "urbanform/sampler.hpp"

namespace urbanform {

enum class RunMode { data, synthetic };

struct PipelineConfig {
  RunMode mode = RunMode::data;

  // data mode inputs
  std::filesystem::path footprints;
  std::filesystem::path landuse;
  std::filesystem::path zips;
  std::filesystem::path income;
  std::set<std::string> residential_codes;
  std::string landuse_code_field = "code";
  std::string zip_field = "zip";
  std::optional<LonLat> origin;  // projection origin; default: footprint bounds center

  // sampling
  std::size_t n = 500000;
  double min_dist = 80.0;
  std::uint64_t seed = 42;

  // tiles
  double extent = 200.0;
  int resolution = 224;

  // balancing and splits
  std::size_t cap = 6250;
  SplitRatios ratios;

  // synthetic mode
  std::size_t synthetic_tiles_per_class = 2000;

  ForestParams forest;
  std::size_t workers = 0;
  std::filesystem::path output = "out";
  std::string image_format = "pgm";  // pgm | png | none
};

// Text form: one `key = value` per line; '#' starts a comment. Relative input
// paths resolve against the config file's directory.
inline PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  PipelineConfig cfg;
  std::map<std::string, std::string> kv;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto number = [&](const std::string& key, auto& out) {
    const auto v = take(key);
    if (!v) return;
    using T = std::remove_reference_t<decltype(out)>;
    if constexpr (std::is_integral_v<T>) {
      T parsed{};
      const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
      if (v->empty() || ec != std::errc{} || ptr != v->data() + v->size() || parsed < 0) {
        throw InputError("config: " + key + " must be a non-negative integer, got '" + *v + "'");
      }
      out = parsed;
    } else {
      const auto d = csv::to_double(*v);
      if (!d) throw InputError("config: " + key + " must be a number, got '" + *v + "'");
      out = static_cast<T>(*d);
    }
  };
  auto path = [&](const std::string& key, std::filesystem::path& out) {
    if (const auto v = take(key)) {
      out = *v;
      if (out.is_relative() && !base_dir.empty()) out = base_dir / out;
    }
  };
  auto list = [](const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ls(v);
    while (std::getline(ls, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
  };

  if (const auto m = take("mode")) {
    if (*m == "data") {
      cfg.mode = RunMode::data;
    } else if (*m == "synthetic") {
      cfg.mode = RunMode::synthetic;
    } else {
      throw InputError("config: mode must be data or synthetic");
    }
  }
  path("footprints", cfg.footprints);
  path("landuse", cfg.landuse);
  path("zips", cfg.zips);
  path("income", cfg.income);
  path("output", cfg.output);
  if (const auto v = take("residential_codes")) {
    for (auto& c : list(*v)) cfg.residential_codes.insert(c);
  }
  if (const auto v = take("landuse_code_field")) cfg.landuse_code_field = *v;
  if (const auto v = take("zip_field")) cfg.zip_field = *v;
  if (const auto v = take("origin")) {
    const auto parts = list(*v);
    const auto lon = parts.size() == 2 ? csv::to_double(parts[0]) : std::nullopt;
    const auto lat = parts.size() == 2 ? csv::to_double(parts[1]) : std::nullopt;
    if (!lon || !lat) throw InputError("config: origin must be 'lon, lat'");
    cfg.origin = LonLat{*lon, *lat};
  }
  number("n", cfg.n);
  number("min_dist", cfg.min_dist);
  number("seed", cfg.seed);
  number("extent", cfg.extent);
  number("resolution", cfg.resolution);
  number("cap", cfg.cap);
  if (const auto v = take("ratios")) {
    const auto parts = list(*v);
    std::vector<double> r;
    for (const auto& p : parts) {
      const auto d = csv::to_double(p);
      if (!d) throw InputError("config: ratios must be three numbers");
      r.push_back(*d);
    }
    if (r.size() != 3) throw InputError("config: ratios must be three numbers");
    cfg.ratios = {r[0], r[1], r[2]};
  }
  number("synthetic_tiles_per_class", cfg.synthetic_tiles_per_class);
  number("n_trees", cfg.forest.n_trees);
  number("features_per_split", cfg.forest.features_per_split);
  number("max_depth", cfg.forest.max_depth);
  number("min_samples_leaf", cfg.forest.min_samples_leaf);
  number("workers", cfg.workers);
  if (const auto v = take("image_format")) cfg.image_format = *v;

  if (!kv.empty()) throw InputError("config: unknown key '" + kv.begin()->first + "'");
  cfg.forest.workers = cfg.workers;
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw InputError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), file.parent_path());
}

// Fails fast before any work: parameters in range and, in data mode, every
// input path present.
inline void validate(const PipelineConfig& cfg) {
  const auto& r = cfg.ratios;
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw InputError("config: ratios must be non-negative and sum to 1");
  }
  if (cfg.n < 1) throw InputError("config: n must be at least 1");
  if (!(cfg.min_dist > 0)) throw InputError("config: min_dist must be positive");
  if (!(cfg.extent > 0)) throw InputError("config: extent must be positive");
  if (cfg.resolution < 16 || cfg.resolution % 16 != 0) throw InputError("config: resolution must be a multiple of 16");
  if (cfg.forest.n_trees < 1) throw InputError("config: n_trees must be at least 1");
  if (cfg.forest.features_per_split < 1 || cfg.forest.features_per_split > 40) {
    throw InputError("config: features_per_split must be in [1, 40]");
  }
  if (cfg.forest.min_samples_leaf < 1) throw InputError("config: min_samples_leaf must be at least 1");
  if (cfg.image_format != "pgm" && cfg.image_format != "png" && cfg.image_format != "none") {
    throw InputError("config: image_format must be pgm, png or none");
  }
  if (cfg.mode == RunMode::data) {
    const std::pair<const char*, const std::filesystem::path*> inputs[] = {
        {"footprints", &cfg.footprints}, {"landuse", &cfg.landuse}, {"zips", &cfg.zips}, {"income", &cfg.income}};
    for (const auto& [name, p] : inputs) {
      if (p->empty()) throw InputError(std::string("config: missing input path '") + name + "'");
      if (!std::filesystem::exists(*p)) {
        throw InputError(std::string("config: ") + name + " file not found: " + p->string());
      }
    }
    if (cfg.residential_codes.empty()) throw InputError("config: residential_codes is empty");
  } else if (cfg.synthetic_tiles_per_class < 1) {
    throw InputError("config: synthetic_tiles_per_class must be at least 1");
  }
}

}  // namespace urbanform

#endif  // URBANFORM_CONFIG_HPP
