#include "simcount/matching.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "simcount/errors.hpp"
#include "simcount/ops.hpp"

namespace simcount {

MetricParams MetricParams::from(const ModelParams& params) {
  MetricParams m;
  m.P = params.get("metric.P");
  m.Q = params.get("metric.Q");
  m.b_x = params.get("metric.b_x");
  m.b_z = params.get("metric.b_z");
  m.w1 = params.find("metric.attn.w1");
  m.c1 = params.find("metric.attn.c1");
  m.w2 = params.find("metric.attn.w2");
  m.c2 = params.find("metric.attn.c2");
  return m;
}

void init_metric_params(ModelParams& params, std::size_t d, bool dynamic, std::uint64_t seed) {
  for (const char* name : {"metric.P", "metric.Q"}) {
    auto rng = parameter_rng(seed, name);
    Tensor m = normal_tensor({d, d}, 0.01, rng);
    auto v = m.mutable_data();
    for (std::size_t i = 0; i < d; ++i) v[i * d + i] += 1.0;
    params.add(name, m, true);
  }
  params.add("metric.b_x", Tensor({d}), false);
  params.add("metric.b_z", Tensor({d}), false);
  if (dynamic) {
    const std::size_t hidden = d / 2;
    auto rng1 = parameter_rng(seed, "metric.attn.w1");
    params.add("metric.attn.w1", normal_tensor({hidden, d}, std::sqrt(2.0 / static_cast<double>(d)), rng1), true);
    params.add("metric.attn.c1", Tensor({hidden}), false);
    auto rng2 = parameter_rng(seed, "metric.attn.w2");
    params.add("metric.attn.w2", normal_tensor({d, hidden}, std::sqrt(1.0 / static_cast<double>(hidden)), rng2),
               true);
    params.add("metric.attn.c2", Tensor({d}), false);
  }
}

namespace {

void check_dims(const FeatureField& field, const Tensor& z, const MetricParams& metric) {
  const std::size_t d = metric.dim();
  if (field.map.rank() != 3 || field.channels() != d || z.rank() != 1 || z.dim(0) != d) {
    throw ContractError("similarity: field " + to_string(field.map.shape()) + " and exemplar " +
                        to_string(z.shape()) + " must both have width " + std::to_string(d));
  }
}

// (P x_ij + b_x) for all positions, as [d, h*w].
Tensor project_query(const FeatureField& field, const MetricParams& metric) {
  const std::size_t d = field.channels(), hw = field.height() * field.width();
  return add_channel_bias(matmul(metric.P, reshape(field.map, {d, hw})), metric.b_x);
}

// Q z + b_z, as [d].
Tensor project_exemplar(const Tensor& z, const MetricParams& metric) {
  const std::size_t d = z.dim(0);
  return add(reshape(matmul(metric.Q, reshape(z, {d, 1})), {d}), metric.b_z);
}

Tensor score_map(const FeatureField& field, const Tensor& query_proj, const Tensor& exemplar_proj) {
  const std::size_t d = exemplar_proj.dim(0);
  Tensor s = matmul(reshape(exemplar_proj, {1, d}), query_proj);
  return reshape(s, {field.height(), field.width()});
}

}  // namespace

Tensor bilinear_similarity(const FeatureField& field, const Tensor& z, const MetricParams& metric) {
  check_dims(field, z, metric);
  return score_map(field, project_query(field, metric), project_exemplar(z, metric));
}

namespace {

// Attention MLP applied to an already projected exemplar Q z + b_z.
Tensor attention_from_projection(const Tensor& u, const MetricParams& metric) {
  if (!metric.has_attention()) throw ContractError("channel_attention: metric has no attention MLP");
  const std::size_t d = metric.dim(), hidden = metric.w1.dim(0);
  Tensor hid = relu(add(reshape(matmul(metric.w1, reshape(u, {d, 1})), {hidden}), metric.c1));
  return tanh(add(reshape(matmul(metric.w2, reshape(hid, {hidden, 1})), {d}), metric.c2));
}

}  // namespace

Tensor channel_attention(const Tensor& z, const MetricParams& metric) {
  const std::size_t d = metric.dim();
  if (z.rank() != 1 || z.dim(0) != d) {
    throw ContractError("channel_attention: exemplar " + to_string(z.shape()) + " vs width " + std::to_string(d));
  }
  return attention_from_projection(project_exemplar(z, metric), metric);
}

Tensor dynamic_similarity(const FeatureField& field, const Tensor& z, const MetricParams& metric) {
  return dynamic_similarity(field, z, channel_attention(z, metric), metric);
}

Tensor dynamic_similarity(const FeatureField& field, const Tensor& z, const Tensor& attention,
                          const MetricParams& metric) {
  check_dims(field, z, metric);
  if (attention.shape() != z.shape()) {
    throw DimensionError("dynamic_similarity: attention " + to_string(attention.shape()) + " vs exemplar " +
                         to_string(z.shape()));
  }
  return score_map(field, project_query(field, metric), hadamard(attention, project_exemplar(z, metric)));
}

Tensor aggregate_exemplars(const Tensor& per_exemplar) {
  if (per_exemplar.rank() != 3) {
    throw ContractError("aggregate_exemplars: expected [n,h,w], got " + to_string(per_exemplar.shape()));
  }
  return mean_axis0(per_exemplar);
}

SimilarityMap match_exemplars(const FeatureField& field, std::span<const Tensor> exemplars,
                              const MetricParams& metric, bool dynamic) {
  if (exemplars.empty()) throw ContractError("match_exemplars: no exemplars");
  // The query projection is shared by every exemplar.
  for (const Tensor& z : exemplars) check_dims(field, z, metric);
  const Tensor query_proj = project_query(field, metric);
  std::vector<Tensor> maps;
  maps.reserve(exemplars.size());
  for (const Tensor& z : exemplars) {
    Tensor ez = project_exemplar(z, metric);
    if (dynamic) ez = hadamard(attention_from_projection(ez, metric), ez);
    maps.push_back(score_map(field, query_proj, ez));
  }
  SimilarityMap out;
  out.per_exemplar = stack(maps);
  out.map = aggregate_exemplars(out.per_exemplar);
  return out;
}

}  // namespace simcount
