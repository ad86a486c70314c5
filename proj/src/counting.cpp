#include "simcount/counting.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "simcount/errors.hpp"
#include "simcount/ops.hpp"

namespace simcount {

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kSOnly: return "s";
    case FusionMode::kXZ: return "xz";
    case FusionMode::kXZS: return "xzs";
    case FusionMode::kXS: return "xs";
  }
  return "xs";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "s" || text == "s_only") return FusionMode::kSOnly;
  if (text == "xz") return FusionMode::kXZ;
  if (text == "xzs") return FusionMode::kXZS;
  if (text == "xs") return FusionMode::kXS;
  throw ConfigError("unknown fusion mode '" + std::string(text) + "' (expected s, xz, xzs, xs)");
}

bool uses_similarity(FusionMode mode) { return mode != FusionMode::kXZ; }

std::size_t fused_channels(FusionMode mode, std::size_t d) {
  switch (mode) {
    case FusionMode::kSOnly: return 1;
    case FusionMode::kXZ: return 2 * d;
    case FusionMode::kXZS: return 2 * d + 1;
    case FusionMode::kXS: return d + 1;
  }
  return d + 1;
}

DensityMap DensityMap::from(Tensor map) {
  DensityMap out;
  double acc = 0.0;
  for (double v : map.data()) acc += v;
  out.map = std::move(map);
  out.predicted_count = acc;
  return out;
}

Tensor fuse(const FeatureField& field, const Tensor& exemplar, const Tensor& similarity, FusionMode mode) {
  const std::size_t h = field.height(), w = field.width();
  std::vector<Tensor> parts;
  const bool want_x = mode != FusionMode::kSOnly;
  const bool want_z = mode == FusionMode::kXZ || mode == FusionMode::kXZS;
  const bool want_s = uses_similarity(mode);
  if (want_x) parts.push_back(field.map);
  if (want_z) {
    if (!exemplar.defined()) throw ContractError("fuse: mode " + to_string(mode) + " needs an exemplar vector");
    parts.push_back(tile_spatial(exemplar, h, w));
  }
  if (want_s) {
    if (!similarity.defined() || similarity.shape() != Shape{h, w}) {
      throw DimensionError("fuse: similarity map must be [" + std::to_string(h) + "," + std::to_string(w) + "]");
    }
    parts.push_back(reshape(similarity, {1, h, w}));
  }
  return concat(parts);
}

void init_counter_params(ModelParams& params, std::size_t in_channels, std::size_t stride,
                         const CounterConfig& cfg, std::uint64_t seed) {
  auto add_conv = [&](const std::string& name, std::size_t c_out, std::size_t c_in, std::size_t k,
                      double gain = 1.0, double bias = 0.0) {
    auto rng = parameter_rng(seed, name + ".weight");
    const double he = std::sqrt(2.0 / static_cast<double>(c_in * k * k));
    params.add(name + ".weight", normal_tensor({c_out, c_in, k, k}, gain * he, rng), true);
    params.add(name + ".bias", Tensor({c_out}, bias), false);
  };
  add_conv("counter.conv1", cfg.width, in_channels, 3);
  add_conv("counter.conv2", cfg.width, cfg.width, 3);
  std::size_t width = cfg.width;
  std::size_t stage = 0;
  for (std::size_t s = stride; s > 1; s /= 2, ++stage) {
    const std::size_t next = std::max(cfg.min_width, width / 2);
    add_conv("counter.up" + std::to_string(stage + 1), next, width, 3);
    width = next;
  }
  // Small weights and a positive bias keep every output pixel active at
  // initialization.
  add_conv("counter.out", 1, width, 1, 0.1, 0.5);
}

DensityMap counter_forward(const Tensor& fused, const ModelParams& params, std::size_t stride) {
  if (stride == 0 || (stride & (stride - 1)) != 0) {
    throw ConfigError("counter stride must be a power of two, got " + std::to_string(stride));
  }
  auto conv = [&](const Tensor& x, const std::string& name, std::size_t padding) {
    return conv2d(x, params.get(name + ".weight"), params.get(name + ".bias"), 1, padding);
  };
  Tensor x = relu(conv(fused, "counter.conv1", 1));
  x = relu(conv(x, "counter.conv2", 1));
  std::size_t stage = 0;
  for (std::size_t s = stride; s > 1; s /= 2, ++stage) {
    x = relu(conv(bilinear_upsample(x, 2), "counter.up" + std::to_string(stage + 1), 1));
  }
  x = scale(relu(conv(x, "counter.out", 0)), kDensityScale);
  return DensityMap::from(reshape(x, {x.dim(1), x.dim(2)}));
}

double integrate(const DensityMap& density) {
  double acc = 0.0;
  for (double v : density.map.data()) acc += v;
  return acc;
}

}  // namespace simcount
