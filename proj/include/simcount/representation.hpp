#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simcount/geometry.hpp"
#include "simcount/parameters.hpp"
#include "simcount/tensor.hpp"

namespace simcount {

struct BackboneConfig {
  std::size_t in_channels = 1;
  // Conv stages with strides 2, 2, 1 (3x3 kernels, relu).
  std::array<std::size_t, 3> widths{16, 32, 32};
  std::size_t d = 32;
  std::size_t l_total = 20;
  double gamma_init = 0.0;
  std::size_t exemplar_size = 32;

  static constexpr std::size_t kStride = 4;

  void validate() const;
};

// F(X): query feature map [d, h_x, w_x] at 1/stride of the image resolution.
struct FeatureField {
  Tensor map;
  std::size_t stride = BackboneConfig::kStride;

  std::size_t channels() const { return map.dim(0); }
  std::size_t height() const { return map.dim(1); }
  std::size_t width() const { return map.dim(2); }
};

struct ExemplarFeature {
  Tensor vector;  // [d]
  std::size_t scale_level = 0;
};

// Adds backbone, query projection and exemplar projection parameters; the
// scale-embedding table and attention weights only when enabled.
void init_representation_params(ModelParams& params, const BackboneConfig& cfg, bool self_similarity,
                                bool scale_embedding, std::uint64_t seed);

FeatureField extract_query_features(const Tensor& image, const ModelParams& params, const BackboneConfig& cfg);
// Crop must already be exemplar_size x exemplar_size.
Tensor extract_exemplar_feature(const Tensor& crop, const ModelParams& params, const BackboneConfig& cfg);

// Nearest-neighbour resample of the boxed region to size x size.
Tensor crop_and_resize(const Tensor& image, const Box& box, std::size_t size);

// min(l_total - 1, floor((h_z / (2 h_x) + w_z / (2 w_x)) * l_total))
std::size_t scale_level(std::size_t h_z, std::size_t w_z, std::size_t h_x, std::size_t w_x, std::size_t l_total);
Tensor apply_scale_embedding(const Tensor& feature, std::size_t level, const Tensor& embeddings);

struct SelfSimilarityParams {
  Tensor wq, bq, wk, bk, wv, bv;  // [d,d] (input-major) and [d]
  Tensor gamma;                   // [1]

  static SelfSimilarityParams from(const ModelParams& params);
};

struct SelfSimilarityOutput {
  FeatureField field;
  std::vector<Tensor> exemplars;
  Tensor attention;  // [N,N] row-stochastic, N = h_x*w_x + n
};

// Joint single-head self-attention over the query positions and exemplar
// vectors; each token becomes token + gamma * attended(token).
SelfSimilarityOutput self_similarity(const FeatureField& field, std::span<const Tensor> exemplars,
                                     const SelfSimilarityParams& params);

}  // namespace simcount
