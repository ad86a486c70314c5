#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "simcount/counting.hpp"
#include "simcount/geometry.hpp"
#include "simcount/tensor.hpp"

namespace simcount {

enum class ShapeFamily { kDisc, kRing, kBar, kCross, kTriangle };

struct CategorySpec {
  int id = 0;
  ShapeFamily family = ShapeFamily::kDisc;
  double size_min = 5.0, size_max = 6.0;  // base extent in pixels
  double orientation_min = 0.0, orientation_max = 0.0;  // radians
  double intensity_min = 0.7, intensity_max = 1.0;
  std::uint64_t texture_seed = 0;
};

// Ten distinct categories: every shape family at two size/intensity regimes.
std::vector<CategorySpec> default_categories();

struct CountingTask {
  Tensor image;  // [c,h,w], values in [0,1]
  std::vector<Point> dots;
  std::vector<Box> exemplar_boxes;  // 1..3 boxes, each enclosing one dot
  int category_id = 0;

  std::size_t gt_count() const { return dots.size(); }
  std::size_t height() const { return image.dim(1); }
  std::size_t width() const { return image.dim(2); }
};

struct CountRange {
  std::size_t min = 3, max = 30;
};

struct ImageSize {
  std::size_t h = 64, w = 64;
};

// Deterministic for a fixed seed. Instances keep their centres at least one
// base size apart and jitter scale by up to +-40%, orientation and
// intensity within the category ranges. `distractor`, when given, adds
// uncounted instances of another category.
CountingTask generate_task(const CategorySpec& spec, CountRange counts, ImageSize size, std::uint64_t seed,
                           const CategorySpec* distractor = nullptr);

// Sum of unit-mass Gaussians (truncated at 4 sigma, renormalised over the
// in-image support) centred on each dot.
DensityMap render_density_gt(const CountingTask& task, double sigma = 1.0);

struct SplitConfig {
  std::vector<int> train{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> val{8};
  std::vector<int> test{9};
  std::size_t tasks_per_category = 10;
  std::uint64_t seed = 0;
  CountRange counts{};
  ImageSize image{};
  bool distractors = false;
};

struct Splits {
  std::vector<CountingTask> train, val, test;
};

Splits make_splits(const SplitConfig& cfg, const std::vector<CategorySpec>& categories = default_categories());

}  // namespace simcount
