#ifndef URBANFORM_SAMPLER_HPP
#define URBANFORM_SAMPLER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "urbanform/errors.hpp"
#include "urbanform/geodata.hpp"
#include "urbanform/random.hpp"

namespace urbanform {

inline constexpr int kNumCategories = 8;

// Ordinal income class 0..7; the top two census ranges share class 7.
class IncomeCategory {
 public:
  constexpr explicit IncomeCategory(int value) : value_(value) {
    if (value < 0 || value >= kNumCategories) throw InputError("income category out of range");
  }
  constexpr int value() const { return value_; }
  friend constexpr bool operator==(IncomeCategory, IncomeCategory) = default;
  friend constexpr auto operator<=>(IncomeCategory, IncomeCategory) = default;

 private:
  int value_;
};

// Lower bounds (dollars) of categories 1..7.
inline constexpr std::array<double, kNumCategories - 1> kIncomeBreaks = {15000.0, 25000.0,  35000.0, 50000.0,
                                                                         75000.0, 100000.0, 150000.0};

inline constexpr std::array<std::string_view, kNumCategories> kIncomeRangeLabels = {
    "Less than $15,000",   "$15,000 - $24,999",   "$25,000 - $34,999",     "$35,000 - $49,999",
    "$50,000 - $74,999",   "$75,000 - $99,999",   "$100,000 - $149,999",   "$150,000 and above"};

inline IncomeCategory income_to_category(double income) {
  if (!(income >= 0.0)) throw InputError("income must be a non-negative number of dollars");
  const auto it = std::upper_bound(kIncomeBreaks.begin(), kIncomeBreaks.end(), income);
  return IncomeCategory(static_cast<int>(it - kIncomeBreaks.begin()));
}

struct SamplePoint {
  std::size_t id = 0;
  Point location;
  LonLat lonlat;
  std::optional<std::string> zip;
  std::optional<IncomeCategory> category;
};

struct SamplingParams {
  std::size_t n = 500000;
  double min_dist = 80.0;
  std::uint64_t seed = 0;
  // Sampling stops after failure_budget * n consecutive rejected darts.
  std::size_t failure_budget = 30;
};

// Dart throwing inside residential zones with a minimum separation. Zones are
// picked by area, darts land uniformly in the zone's bounding box, and a hash
// grid with cells of min_dist / sqrt(2) holds at most one accepted point per
// cell, so the neighbor test touches a fixed 5x5 block.
inline std::vector<SamplePoint> sample_points(std::span<const ResidentialZone> zones, const SamplingParams& params,
                                              const LocalProjection& proj = LocalProjection{}) {
  if (params.n < 1) throw InputError("sample count must be at least 1");
  if (!(params.min_dist > 0.0)) throw InputError("minimum distance must be positive");
  std::vector<SamplePoint> out;
  if (zones.empty()) return out;

  std::vector<double> cumulative;
  std::vector<Box> boxes;
  double total = 0.0;
  for (const auto& z : zones) {
    total += std::max(0.0, area(z.polygon));
    cumulative.push_back(total);
    boxes.push_back(bounds(z.polygon));
  }
  if (!(total > 0.0)) return out;

  const double cell = params.min_dist / std::sqrt(2.0);
  const double min_sq = params.min_dist * params.min_dist;
  auto key = [](std::int64_t ix, std::int64_t iy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) | static_cast<std::uint32_t>(iy);
  };
  std::unordered_map<std::uint64_t, std::size_t> grid;

  Rng rng(params.seed);
  const std::size_t budget = params.failure_budget * params.n;
  std::size_t failures = 0;
  while (out.size() < params.n && failures < budget) {
    const double u = rng.uniform() * total;
    const auto zi = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(zones.size()) - 1));
    const Box& b = boxes[zi];
    const Point p{rng.uniform(b.min_x, b.max_x), rng.uniform(b.min_y, b.max_y)};
    if (!point_in_polygon(p, zones[zi].polygon)) {
      ++failures;
      continue;
    }
    const auto ix = static_cast<std::int64_t>(std::floor(p.x / cell));
    const auto iy = static_cast<std::int64_t>(std::floor(p.y / cell));
    bool clear = true;
    for (std::int64_t dx = -2; dx <= 2 && clear; ++dx) {
      for (std::int64_t dy = -2; dy <= 2 && clear; ++dy) {
        const auto it = grid.find(key(ix + dx, iy + dy));
        if (it == grid.end()) continue;
        const Point q = out[it->second].location;
        if ((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) < min_sq) clear = false;
      }
    }
    if (!clear) {
      ++failures;
      continue;
    }
    failures = 0;
    grid.emplace(key(ix, iy), out.size());
    out.push_back({out.size(), p, proj.unproject(p), std::nullopt, std::nullopt});
  }
  return out;
}

inline SamplePoint label_point(SamplePoint point, const IncomeIndex& index) {
  point.zip.reset();
  point.category.reset();
  if (const auto hit = index.lookup(point.location)) {
    point.zip = hit->zip;
    if (hit->income) point.category = income_to_category(*hit->income);
  }
  return point;
}

enum class Split { train, val, test, excluded };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::excluded: return "excluded";
  }
  return "excluded";
}

inline std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  if (s == "excluded") return Split::excluded;
  return std::nullopt;
}

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct SplitAssignment {
  std::vector<Split> split;            // one per input item
  std::vector<int> empty_categories;   // categories with no labeled items
};

// Per-category cap, then train/val/test allocation by largest remainder
// (ties go to the earlier split). Unlabeled items are excluded. Each
// category is shuffled with its own derived seed, so the result does not
// depend on how other categories are populated.
inline SplitAssignment balance_and_split(std::span<const std::optional<IncomeCategory>> categories,
                                         std::size_t per_class_cap, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw InputError("split ratios must be non-negative and sum to 1");
  }
  SplitAssignment out;
  out.split.assign(categories.size(), Split::excluded);
  std::array<std::vector<std::size_t>, kNumCategories> members;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i]) members[static_cast<std::size_t>(categories[i]->value())].push_back(i);
  }
  for (int c = 0; c < kNumCategories; ++c) {
    auto& idx = members[static_cast<std::size_t>(c)];
    if (idx.empty()) {
      out.empty_categories.push_back(c);
      continue;
    }
    Rng rng(derive_seed(seed, "split/" + std::to_string(c)));
    rng.shuffle(std::span<std::size_t>(idx));
    const std::size_t kept = std::min(per_class_cap, idx.size());

    const std::array<double, 3> share = {ratios.train * static_cast<double>(kept),
                                         ratios.val * static_cast<double>(kept),
                                         ratios.test * static_cast<double>(kept)};
    std::array<std::size_t, 3> count{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      count[k] = static_cast<std::size_t>(std::floor(share[k] + 1e-9));
      frac[k] = share[k] - static_cast<double>(count[k]);
      assigned += count[k];
    }
    while (assigned < kept) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < 3; ++k) {
        if (frac[k] > frac[best] + 1e-12) best = k;
      }
      ++count[best];
      frac[best] = -1.0;
      ++assigned;
    }
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t m = 0; m < count[k]; ++m) out.split[idx[pos++]] = static_cast<Split>(k);
    }
  }
  return out;
}

inline SplitAssignment balance_and_split(std::span<const SamplePoint> points, std::size_t per_class_cap,
                                         const SplitRatios& ratios, std::uint64_t seed) {
  std::vector<std::optional<IncomeCategory>> cats;
  cats.reserve(points.size());
  for (const auto& p : points) cats.push_back(p.category);
  return balance_and_split(cats, per_class_cap, ratios, seed);
}

}  // namespace urbanform

#endif  // URBANFORM_SAMPLER_HPP
