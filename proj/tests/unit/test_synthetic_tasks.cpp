#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "simcount/errors.hpp"
#include "simcount/synthetic_tasks.hpp"

namespace simcount {
namespace {

TEST(Categories, TenDistinct) {
  const auto cats = default_categories();
  ASSERT_EQ(cats.size(), 10u);
  std::set<std::pair<int, double>> regimes;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    EXPECT_EQ(cats[i].id, static_cast<int>(i));
    EXPECT_LE(cats[i].size_min, cats[i].size_max);
    regimes.insert({static_cast<int>(cats[i].family), cats[i].size_min});
  }
  EXPECT_EQ(regimes.size(), 10u);
}

class EveryCategory : public ::testing::TestWithParam<int> {};

TEST_P(EveryCategory, TaskInvariants) {
  const CategorySpec spec = default_categories()[static_cast<std::size_t>(GetParam())];
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const CountingTask t = generate_task(spec, {3, 30}, {64, 64}, seed);
    EXPECT_EQ(t.image.shape(), (Shape{1, 64, 64}));
    EXPECT_EQ(t.category_id, spec.id);
    EXPECT_GE(t.gt_count(), 3u);
    EXPECT_LE(t.gt_count(), 30u);
    for (double v : t.image.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    for (const Point& p : t.dots) {
      EXPECT_GE(p.x, 0);
      EXPECT_GE(p.y, 0);
      EXPECT_LT(p.x, 64);
      EXPECT_LT(p.y, 64);
    }
    ASSERT_GE(t.exemplar_boxes.size(), 1u);
    EXPECT_LE(t.exemplar_boxes.size(), 3u);
    for (const Box& b : t.exemplar_boxes) {
      EXPECT_GT(b.width(), 0);
      EXPECT_GT(b.height(), 0);
      int enclosed = 0;
      for (const Point& p : t.dots) enclosed += b.contains(p) ? 1 : 0;
      EXPECT_EQ(enclosed, 1);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Categories, EveryCategory, ::testing::Range(0, 10));

TEST(GenerateTask, DeterministicPerSeed) {
  const auto cats = default_categories();
  const CountingTask a = generate_task(cats[2], {3, 30}, {64, 64}, 11);
  const CountingTask b = generate_task(cats[2], {3, 30}, {64, 64}, 11);
  const CountingTask c = generate_task(cats[2], {3, 30}, {64, 64}, 12);
  EXPECT_EQ(a.dots, b.dots);
  EXPECT_EQ(a.exemplar_boxes, b.exemplar_boxes);
  EXPECT_TRUE(std::equal(a.image.data().begin(), a.image.data().end(), b.image.data().begin()));
  EXPECT_FALSE(a.dots == c.dots && std::equal(a.image.data().begin(), a.image.data().end(), c.image.data().begin()));
}

TEST(GenerateTask, FixedCountRange) {
  const auto t = generate_task(default_categories()[0], {7, 7}, {64, 64}, 3);
  EXPECT_EQ(t.gt_count(), 7u);
}

TEST(GenerateTask, DistractorsDoNotChangeLabels) {
  const auto cats = default_categories();
  const auto t = generate_task(cats[0], {5, 10}, {64, 64}, 4, &cats[3]);
  EXPECT_GE(t.gt_count(), 5u);
  EXPECT_LE(t.gt_count(), 10u);
  EXPECT_EQ(t.category_id, 0);
}

TEST(GenerateTask, ImpossiblePlacementIsReported) {
  EXPECT_THROW(generate_task(default_categories()[9], {30, 30}, {8, 8}, 1), PlacementError);
  EXPECT_THROW(generate_task(default_categories()[0], {5, 3}, {64, 64}, 1), ContractError);
}

TEST(DensityGt, IntegratesToCount) {
  const auto cats = default_categories();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = generate_task(cats[seed % 10], {3, 30}, {64, 64}, seed);
    for (double sigma : {0.5, 1.0, 2.0}) {
      const DensityMap d = render_density_gt(t, sigma);
      EXPECT_NEAR(d.predicted_count, static_cast<double>(t.gt_count()), 1e-9);
      for (double v : d.map.data()) EXPECT_GE(v, 0.0);
    }
  }
}

TEST(DensityGt, CornerDotKeepsUnitMass) {
  CountingTask t;
  t.image = Tensor({1, 8, 8});
  t.dots = {{0, 0}, {7, 7}};
  const DensityMap d = render_density_gt(t, 1.5);
  EXPECT_NEAR(d.predicted_count, 2.0, 1e-12);
  EXPECT_GT(d.map.at(0), d.map.at(1));
  EXPECT_THROW(render_density_gt(t, 0.0), ContractError);
}

TEST(Splits, CategoriesAreDisjoint) {
  SplitConfig cfg;
  cfg.tasks_per_category = 3;
  const Splits s = make_splits(cfg);
  EXPECT_EQ(s.train.size(), 24u);
  EXPECT_EQ(s.val.size(), 3u);
  EXPECT_EQ(s.test.size(), 3u);
  for (const auto& t : s.train) EXPECT_LT(t.category_id, 8);
  for (const auto& t : s.val) EXPECT_EQ(t.category_id, 8);
  for (const auto& t : s.test) EXPECT_EQ(t.category_id, 9);
}

TEST(Splits, RejectsOverlapAndUnknownIds) {
  SplitConfig overlap;
  overlap.val = {7};
  EXPECT_THROW(make_splits(overlap), ConfigError);
  SplitConfig unknown;
  unknown.test = {10};
  EXPECT_THROW(make_splits(unknown), ConfigError);
  SplitConfig empty;
  empty.tasks_per_category = 0;
  EXPECT_THROW(make_splits(empty), ConfigError);
}

TEST(Splits, SeedChangesTasks) {
  SplitConfig a, b;
  a.tasks_per_category = b.tasks_per_category = 2;
  b.seed = 1;
  EXPECT_FALSE(make_splits(a).test[0].dots == make_splits(b).test[0].dots);
  EXPECT_EQ(make_splits(a).test[1].dots, make_splits(a).test[1].dots);
}

}  // namespace
}  // namespace simcount
