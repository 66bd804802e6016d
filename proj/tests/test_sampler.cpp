#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "oracles.hpp"
#include "urbanform/sampler.hpp"

using namespace urbanform;

namespace {

std::vector<ResidentialZone> fixture_zones() {
  // An L-shaped zone, a zone with a hole, and a thin strip.
  Polygon l{close_ring({{0, 0}, {2000, 0}, {2000, 600}, {600, 600}, {600, 2000}, {0, 2000}}), {}};
  Polygon holed = rectangle(3000, 0, 5000, 2000);
  Ring hole = rectangle(3500, 500, 4500, 1500).exterior;
  orient_ring(hole, false);
  holed.holes.push_back(hole);
  return {{l, "R1"}, {holed, "R2"}, {rectangle(0, 2500, 5000, 2600), "R3"}};
}

}  // namespace

TEST(IncomeCategory, BreaksFollowTheTable) {
  EXPECT_EQ(income_to_category(0).value(), 0);
  EXPECT_EQ(income_to_category(14999.99).value(), 0);
  EXPECT_EQ(income_to_category(15000).value(), 1);
  EXPECT_EQ(income_to_category(24999).value(), 1);
  EXPECT_EQ(income_to_category(25000).value(), 2);
  EXPECT_EQ(income_to_category(35000).value(), 3);
  EXPECT_EQ(income_to_category(49999).value(), 3);
  EXPECT_EQ(income_to_category(50000).value(), 4);
  EXPECT_EQ(income_to_category(75000).value(), 5);
  EXPECT_EQ(income_to_category(100000).value(), 6);
  EXPECT_EQ(income_to_category(149999).value(), 6);
  EXPECT_EQ(income_to_category(150000).value(), 7);
  EXPECT_EQ(income_to_category(1e9).value(), 7);
  EXPECT_THROW(income_to_category(-1), InputError);
}

TEST(Sampler, RespectsSeparationAndContainment) {
  const auto zones = fixture_zones();
  SamplingParams p;
  p.n = 400;
  p.min_dist = 80;
  p.seed = 9;
  const auto pts = sample_points(zones, p);
  ASSERT_GT(pts.size(), 100u);
  std::vector<Point> locs;
  for (const auto& s : pts) {
    locs.push_back(s.location);
    const bool inside = std::any_of(zones.begin(), zones.end(),
                                    [&](const ResidentialZone& z) { return point_in_polygon(s.location, z.polygon); });
    EXPECT_TRUE(inside);
  }
  EXPECT_GE(oracle::min_pairwise_distance(locs), 80.0);
}

TEST(Sampler, IsDeterministicPerSeed) {
  const auto zones = fixture_zones();
  SamplingParams p;
  p.n = 200;
  p.seed = 1;
  const auto a = sample_points(zones, p);
  const auto b = sample_points(zones, p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].location, b[i].location);
  p.seed = 2;
  const auto c = sample_points(zones, p);
  EXPECT_NE(a.front().location, c.front().location);
}

// A 100 x 100 m zone fits at most four points 80 m apart (the corners).
TEST(Sampler, SmallZoneSaturatesAndStops) {
  const std::vector<ResidentialZone> zones{{rectangle(0, 0, 100, 100), "R"}};
  SamplingParams p;
  p.n = 50;
  p.seed = 4;
  const auto pts = sample_points(zones, p);
  EXPECT_GE(pts.size(), 1u);
  EXPECT_LE(pts.size(), 4u);
}

TEST(Sampler, EmptyInputsAndBadParams) {
  SamplingParams p;
  p.n = 10;
  EXPECT_TRUE(sample_points({}, p).empty());
  p.min_dist = 0;
  const auto zones = fixture_zones();
  EXPECT_THROW(sample_points(zones, p), InputError);
}

TEST(Sampler, LabelPointUsesIncomeIndex) {
  IncomeIndex index;
  index.add_zone("02139", rectangle(0, 0, 100, 100));
  index.set_income("02139", 60000);
  SamplePoint p;
  p.location = {50, 50};
  const auto labeled = label_point(p, index);
  EXPECT_EQ(*labeled.zip, "02139");
  EXPECT_EQ(labeled.category->value(), 4);
  p.location = {500, 50};
  EXPECT_FALSE(label_point(p, index).category.has_value());
}

TEST(Split, CapsBalancesAndAllocatesByLargestRemainder) {
  std::vector<std::optional<IncomeCategory>> cats;
  for (int i = 0; i < 1000; ++i) cats.emplace_back(IncomeCategory{0});
  for (int i = 0; i < 37; ++i) cats.emplace_back(IncomeCategory{3});
  for (int i = 0; i < 5; ++i) cats.emplace_back(std::nullopt);
  const auto a = balance_and_split(cats, 100, SplitRatios{}, 7);
  std::map<std::pair<int, Split>, int> count;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    if (!cats[i]) {
      EXPECT_EQ(a.split[i], Split::excluded);
      continue;
    }
    ++count[{cats[i]->value(), a.split[i]}];
  }
  EXPECT_EQ((count[{0, Split::train}]), 70);
  EXPECT_EQ((count[{0, Split::val}]), 15);
  EXPECT_EQ((count[{0, Split::test}]), 15);
  EXPECT_EQ((count[{0, Split::excluded}]), 900);
  // 37 * (0.7, 0.15, 0.15) = (25.9, 5.55, 5.55) -> (26, 6, 5)
  EXPECT_EQ((count[{3, Split::train}]), 26);
  EXPECT_EQ((count[{3, Split::val}]), 6);
  EXPECT_EQ((count[{3, Split::test}]), 5);
  EXPECT_EQ(a.empty_categories, (std::vector<int>{1, 2, 4, 5, 6, 7}));
}

TEST(Split, CategoryAssignmentIgnoresOtherCategories) {
  std::vector<std::optional<IncomeCategory>> only;
  for (int i = 0; i < 50; ++i) only.emplace_back(IncomeCategory{2});
  auto mixed = only;
  for (int i = 0; i < 80; ++i) mixed.emplace_back(IncomeCategory{5});
  const auto a = balance_and_split(only, 40, SplitRatios{}, 3);
  const auto b = balance_and_split(mixed, 40, SplitRatios{}, 3);
  for (std::size_t i = 0; i < only.size(); ++i) EXPECT_EQ(a.split[i], b.split[i]);
}

TEST(Split, RejectsBadRatios) {
  std::vector<std::optional<IncomeCategory>> cats{IncomeCategory{0}};
  EXPECT_THROW(balance_and_split(cats, 10, SplitRatios{0.5, 0.5, 0.5}, 1), InputError);
}
