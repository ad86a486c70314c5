#include "simcount/synthetic_tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "simcount/errors.hpp"
#include "simcount/parameters.hpp"

namespace simcount {

std::vector<CategorySpec> default_categories() {
  constexpr double pi = std::numbers::pi;
  // id, family, size range, orientation range, intensity range, texture seed
  return {
      {0, ShapeFamily::kDisc, 5.0, 6.5, 0.0, 0.0, 0.75, 1.0, 101},
      {1, ShapeFamily::kRing, 6.5, 7.5, 0.0, 0.0, 0.70, 0.95, 102},
      {2, ShapeFamily::kBar, 6.0, 7.5, 0.0, pi, 0.70, 1.0, 103},
      {3, ShapeFamily::kCross, 6.0, 7.5, 0.0, pi / 2, 0.75, 1.0, 104},
      {4, ShapeFamily::kTriangle, 6.0, 7.5, 0.0, 2 * pi / 3, 0.70, 0.95, 105},
      {5, ShapeFamily::kDisc, 3.5, 4.5, 0.0, 0.0, 0.55, 0.80, 106},
      {6, ShapeFamily::kRing, 7.0, 8.0, 0.0, 0.0, 0.55, 0.80, 107},
      {7, ShapeFamily::kBar, 4.5, 5.5, 0.0, pi, 0.55, 0.85, 108},
      {8, ShapeFamily::kCross, 5.0, 6.0, 0.0, pi / 2, 0.55, 0.85, 109},
      {9, ShapeFamily::kTriangle, 4.5, 5.5, 0.0, 2 * pi / 3, 0.60, 0.90, 110},
  };
}

namespace {

struct Instance {
  double cx = 0, cy = 0;  // continuous centre, pixel units
  double size = 0, angle = 0, intensity = 0;
  ShapeFamily family = ShapeFamily::kDisc;
};

// Membership test in the instance frame: (u, v) relative to the centre,
// already rotated by -angle.
bool inside(ShapeFamily family, double u, double v, double s) {
  const double half = 0.5 * s;
  switch (family) {
    case ShapeFamily::kDisc: return u * u + v * v <= half * half;
    case ShapeFamily::kRing: {
      const double r2 = u * u + v * v;
      const double inner = 0.55 * half;
      return r2 <= half * half && r2 >= inner * inner;
    }
    case ShapeFamily::kBar: return std::abs(u) <= half && std::abs(v) <= 0.18 * s;
    case ShapeFamily::kCross:
      return (std::abs(u) <= half && std::abs(v) <= 0.15 * s) || (std::abs(v) <= half && std::abs(u) <= 0.15 * s);
    case ShapeFamily::kTriangle: {
      const double inradius = 0.3 * s;  // circumradius 0.6 s
      for (int k = 0; k < 3; ++k) {
        const double a = std::numbers::pi / 2 + k * 2 * std::numbers::pi / 3;
        if (u * std::cos(a) + v * std::sin(a) > inradius) return false;
      }
      return true;
    }
  }
  return false;
}

// Blends the instance into the image with 3x3 supersampled coverage and
// returns the tight box of touched pixels.
Box render_instance(std::vector<double>& pixels, std::size_t h, std::size_t w, const Instance& inst) {
  const double reach = 0.75 * inst.size + 1.0;
  const int x_lo = std::max(0, static_cast<int>(std::floor(inst.cx - reach)));
  const int x_hi = std::min(static_cast<int>(w) - 1, static_cast<int>(std::ceil(inst.cx + reach)));
  const int y_lo = std::max(0, static_cast<int>(std::floor(inst.cy - reach)));
  const int y_hi = std::min(static_cast<int>(h) - 1, static_cast<int>(std::ceil(inst.cy + reach)));
  const double c = std::cos(inst.angle), s = std::sin(inst.angle);
  Box box{x_hi + 1, y_hi + 1, x_lo, y_lo};
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      int hits = 0;
      for (int sy = 0; sy < 3; ++sy) {
        for (int sx = 0; sx < 3; ++sx) {
          const double px = x + (sx + 0.5) / 3.0 - inst.cx;
          const double py = y + (sy + 0.5) / 3.0 - inst.cy;
          const double u = c * px + s * py, v = -s * px + c * py;
          hits += inside(inst.family, u, v, inst.size) ? 1 : 0;
        }
      }
      if (hits == 0) continue;
      const double coverage = hits / 9.0;
      double& p = pixels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
      p = p * (1.0 - coverage) + inst.intensity * coverage;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
    }
  }
  return box;
}

std::vector<double> render_background(const CategorySpec& spec, ImageSize size, std::mt19937_64& rng) {
  std::mt19937_64 texture(spec.texture_seed);
  std::uniform_real_distribution<double> freq(0.08, 0.35);
  const double fx = freq(texture), fy = freq(texture);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  const double px = phase(rng), py = phase(rng);
  std::uniform_real_distribution<double> noise(0.0, 0.04);
  std::vector<double> pixels(size.h * size.w);
  for (std::size_t y = 0; y < size.h; ++y)
    for (std::size_t x = 0; x < size.w; ++x)
      pixels[y * size.w + x] = 0.1 + 0.05 * std::sin(fx * x + px) * std::cos(fy * y + py) + noise(rng);
  return pixels;
}

// Rejection sampling of a centre keeping `min_dist` from all placed centres.
bool place(std::vector<Instance>& placed, Instance inst, double min_dist, ImageSize size, std::mt19937_64& rng) {
  const double margin = 0.75 * inst.size + 1.0;
  if (2 * margin >= static_cast<double>(std::min(size.h, size.w))) return false;
  std::uniform_real_distribution<double> ux(margin, static_cast<double>(size.w) - margin);
  std::uniform_real_distribution<double> uy(margin, static_cast<double>(size.h) - margin);
  for (int attempt = 0; attempt < 200; ++attempt) {
    inst.cx = ux(rng);
    inst.cy = uy(rng);
    const bool clear = std::all_of(placed.begin(), placed.end(), [&](const Instance& o) {
      return std::hypot(o.cx - inst.cx, o.cy - inst.cy) >= min_dist;
    });
    if (clear) {
      placed.push_back(inst);
      return true;
    }
  }
  return false;
}

Instance draw_instance(const CategorySpec& spec, double base, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.4, 0.4);
  std::uniform_real_distribution<double> angle(spec.orientation_min, std::max(spec.orientation_min, spec.orientation_max));
  std::uniform_real_distribution<double> intensity(spec.intensity_min, spec.intensity_max);
  Instance inst;
  inst.family = spec.family;
  inst.size = base * (1.0 + jitter(rng));
  inst.angle = angle(rng);
  inst.intensity = intensity(rng);
  return inst;
}

}  // namespace

CountingTask generate_task(const CategorySpec& spec, CountRange counts, ImageSize size, std::uint64_t seed,
                           const CategorySpec* distractor) {
  if (counts.min < 1 || counts.max < counts.min) throw ContractError("generate_task: invalid count range");
  if (size.h == 0 || size.w == 0) throw ContractError("generate_task: empty image");
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(spec.id)));
  std::uniform_int_distribution<std::size_t> count_dist(counts.min, counts.max);
  const std::size_t count = count_dist(rng);

  for (int restart = 0; restart < 20; ++restart) {
    std::uniform_real_distribution<double> base_dist(spec.size_min, spec.size_max);
    const double base = base_dist(rng);
    std::vector<Instance> placed;
    bool ok = true;
    for (std::size_t i = 0; i < count && ok; ++i) ok = place(placed, draw_instance(spec, base, rng), base, size, rng);
    if (!ok) continue;

    std::vector<Instance> extras;
    if (distractor != nullptr) {
      std::uniform_real_distribution<double> dbase_dist(distractor->size_min, distractor->size_max);
      const double dbase = dbase_dist(rng);
      std::uniform_int_distribution<int> n_extra(2, 8);
      std::vector<Instance> all = placed;
      const int wanted = n_extra(rng);
      for (int i = 0; i < wanted; ++i) {
        if (place(all, draw_instance(*distractor, dbase, rng), std::max(base, dbase), size, rng)) {
          extras.push_back(all.back());
        }
      }
    }

    std::vector<double> pixels = render_background(spec, size, rng);
    CountingTask task;
    task.category_id = spec.id;
    std::vector<Box> boxes;
    for (const Instance& inst : placed) {
      Box b = render_instance(pixels, size.h, size.w, inst);
      b = {std::max(0, b.x0 - 1), std::max(0, b.y0 - 1), std::min(static_cast<int>(size.w), b.x1 + 1),
           std::min(static_cast<int>(size.h), b.y1 + 1)};
      boxes.push_back(b);
      task.dots.push_back({static_cast<int>(std::floor(inst.cx)), static_cast<int>(std::floor(inst.cy))});
    }
    for (const Instance& inst : extras) render_instance(pixels, size.h, size.w, inst);
    for (double& p : pixels) p = std::clamp(p, 0.0, 1.0);

    std::vector<std::size_t> order(placed.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t wanted = std::min<std::size_t>(3, count);
    for (std::size_t idx : order) {
      const Box& b = boxes[idx];
      const auto enclosed = std::count_if(task.dots.begin(), task.dots.end(), [&](const Point& p) { return b.contains(p); });
      if (enclosed == 1) task.exemplar_boxes.push_back(b);
      if (task.exemplar_boxes.size() == wanted) break;
    }
    if (task.exemplar_boxes.size() < wanted) continue;

    task.image = Tensor({1, size.h, size.w}, std::move(pixels));
    return task;
  }
  throw PlacementError("generate_task: could not place " + std::to_string(count) + " instances of category " +
                       std::to_string(spec.id) + " in " + std::to_string(size.h) + "x" + std::to_string(size.w));
}

DensityMap render_density_gt(const CountingTask& task, double sigma) {
  if (!(sigma > 0.0)) throw ContractError("render_density_gt: sigma must be positive");
  const std::size_t h = task.height(), w = task.width();
  Tensor map({h, w});
  auto out = map.mutable_data();
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  const double cutoff = 16.0 * sigma * sigma;
  std::vector<double> kernel;
  for (const Point& p : task.dots) {
    kernel.clear();
    double mass = 0.0;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        const int x = p.x + dx, y = p.y + dy;
        const double r2 = dx * dx + dy * dy;
        double v = 0.0;
        if (x >= 0 && y >= 0 && x < static_cast<int>(w) && y < static_cast<int>(h) && r2 <= cutoff) {
          v = std::exp(-r2 / (2 * sigma * sigma));
        }
        kernel.push_back(v);
        mass += v;
      }
    }
    std::size_t k = 0;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx, ++k) {
        if (kernel[k] == 0.0) continue;
        out[static_cast<std::size_t>(p.y + dy) * w + static_cast<std::size_t>(p.x + dx)] += kernel[k] / mass;
      }
    }
  }
  return DensityMap::from(map);
}

Splits make_splits(const SplitConfig& cfg, const std::vector<CategorySpec>& categories) {
  std::set<int> seen;
  for (const auto* ids : {&cfg.train, &cfg.val, &cfg.test}) {
    for (int id : *ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= categories.size()) {
        throw ConfigError("category id " + std::to_string(id) + " out of range");
      }
      if (!seen.insert(id).second) throw ConfigError("category id " + std::to_string(id) + " appears in two splits");
    }
  }
  if (cfg.tasks_per_category == 0) throw ConfigError("tasks_per_category must be positive");

  auto build = [&](const std::vector<int>& ids, std::uint64_t split_index) {
    std::vector<CountingTask> tasks;
    for (int id : ids) {
      const CategorySpec& spec = categories[static_cast<std::size_t>(id)];
      const CategorySpec* distractor =
          cfg.distractors ? &categories[(static_cast<std::size_t>(id) + 1) % categories.size()] : nullptr;
      for (std::size_t t = 0; t < cfg.tasks_per_category; ++t) {
        const std::uint64_t seed = mix_seed(mix_seed(cfg.seed, split_index), static_cast<std::uint64_t>(id) * 100003 + t);
        tasks.push_back(generate_task(spec, cfg.counts, cfg.image, seed, distractor));
      }
    }
    return tasks;
  };
  return {build(cfg.train, 0), build(cfg.val, 1), build(cfg.test, 2)};
}

}  // namespace simcount
