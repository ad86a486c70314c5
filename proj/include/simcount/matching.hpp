#pragma once

#include <cstdint>
#include <span>

#include "simcount/parameters.hpp"
#include "simcount/representation.hpp"
#include "simcount/tensor.hpp"

namespace simcount {

// Bilinear metric (P, Q, b_x, b_z) plus the channel-attention MLP
// d -> d/2 (relu) -> d (tanh). MLP tensors are undefined for the static metric.
struct MetricParams {
  Tensor P, Q;        // [d,d]
  Tensor b_x, b_z;    // [d]
  Tensor w1, c1;      // [d/2,d], [d/2]
  Tensor w2, c2;      // [d,d/2], [d]

  static MetricParams from(const ModelParams& params);
  std::size_t dim() const { return P.dim(0); }
  bool has_attention() const { return w1.defined(); }
};

// P, Q = I + N(0, 0.01^2), zero biases; MLP only when `dynamic`.
void init_metric_params(ModelParams& params, std::size_t d, bool dynamic, std::uint64_t seed);

// S_ij = (P x_ij + b_x)^T (Q z + b_z)
Tensor bilinear_similarity(const FeatureField& field, const Tensor& z, const MetricParams& metric);
// a = tanh(W2 relu(W1 (Q z + b_z) + c1) + c2)
Tensor channel_attention(const Tensor& z, const MetricParams& metric);
// S_ij = (P x_ij + b_x)^T (a o (Q z + b_z))
Tensor dynamic_similarity(const FeatureField& field, const Tensor& z, const MetricParams& metric);
// Same with an externally supplied attention vector.
Tensor dynamic_similarity(const FeatureField& field, const Tensor& z, const Tensor& attention,
                          const MetricParams& metric);

// Elementwise mean over the exemplar axis of [n,h,w].
Tensor aggregate_exemplars(const Tensor& per_exemplar);

struct SimilarityMap {
  Tensor map;           // [h_x, w_x]
  Tensor per_exemplar;  // [n, h_x, w_x]
};

SimilarityMap match_exemplars(const FeatureField& field, std::span<const Tensor> exemplars,
                              const MetricParams& metric, bool dynamic);

}  // namespace simcount
