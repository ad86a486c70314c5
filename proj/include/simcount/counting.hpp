#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "simcount/parameters.hpp"
#include "simcount/representation.hpp"
#include "simcount/tensor.hpp"

namespace simcount {

// Counter input composition: S = similarity map, X = query features,
// Z = exemplar vector tiled over the query grid.
enum class FusionMode { kSOnly, kXZ, kXZS, kXS };

std::string to_string(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view text);
bool uses_similarity(FusionMode mode);
std::size_t fused_channels(FusionMode mode, std::size_t d);

struct DensityMap {
  Tensor map;  // [h, w]
  double predicted_count = 0.0;

  static DensityMap from(Tensor map);
};

// Channel concatenation per mode. `similarity` may be undefined for kXZ and
// `exemplar` may be undefined for kSOnly / kXS.
Tensor fuse(const FeatureField& field, const Tensor& exemplar, const Tensor& similarity, FusionMode mode);

struct CounterConfig {
  std::size_t width = 32;  // two 3x3 stages at query-grid resolution
  // Each x2 upsample stage halves the width, down to this floor.
  std::size_t min_width = 8;
};

void init_counter_params(ModelParams& params, std::size_t in_channels, std::size_t stride,
                         const CounterConfig& cfg, std::uint64_t seed);

// Fixed factor between the final activation and the density map. Per-pixel
// densities are of order 1e-3; this keeps the output layer at unit scale.
inline constexpr double kDensityScale = 1e-3;

// Density map at `stride` times the input resolution; stride must be a
// power of two. The final relu keeps densities non-negative.
DensityMap counter_forward(const Tensor& fused, const ModelParams& params, std::size_t stride);

double integrate(const DensityMap& density);

}  // namespace simcount
