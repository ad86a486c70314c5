#include "simcount/representation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simcount/errors.hpp"
#include "simcount/ops.hpp"

namespace simcount {

void BackboneConfig::validate() const {
  if (d == 0 || d % 2 != 0) throw ConfigError("feature width d must be positive and even, got " + std::to_string(d));
  if (l_total < 1) throw ConfigError("l_total must be >= 1");
  if (in_channels == 0) throw ConfigError("in_channels must be positive");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("backbone widths must be positive");
  }
  if (exemplar_size == 0 || exemplar_size % kStride != 0) {
    throw ConfigError("exemplar_size must be a positive multiple of " + std::to_string(kStride));
  }
}

void init_representation_params(ModelParams& params, const BackboneConfig& cfg, bool self_similarity,
                                bool scale_embedding, std::uint64_t seed) {
  cfg.validate();
  std::size_t c_in = cfg.in_channels;
  for (std::size_t s = 0; s < cfg.widths.size(); ++s) {
    const std::string prefix = "backbone.conv" + std::to_string(s + 1);
    auto rng = parameter_rng(seed, prefix + ".weight");
    const double he = std::sqrt(2.0 / static_cast<double>(c_in * 9));
    params.add(prefix + ".weight", normal_tensor({cfg.widths[s], c_in, 3, 3}, he, rng), true);
    params.add(prefix + ".bias", Tensor({cfg.widths[s]}), false);
    c_in = cfg.widths[s];
  }
  const double fan = std::sqrt(1.0 / static_cast<double>(c_in));
  {
    auto rng = parameter_rng(seed, "query_proj.weight");
    params.add("query_proj.weight", normal_tensor({cfg.d, c_in, 1, 1}, fan, rng), true);
    params.add("query_proj.bias", Tensor({cfg.d}), false);
  }
  {
    auto rng = parameter_rng(seed, "exemplar_proj.weight");
    params.add("exemplar_proj.weight", normal_tensor({cfg.d, c_in}, fan, rng), true);
    params.add("exemplar_proj.bias", Tensor({cfg.d}), false);
  }
  if (scale_embedding) {
    auto rng = parameter_rng(seed, "scale_embedding");
    params.add("scale_embedding", uniform_tensor({cfg.l_total, cfg.d}, 0.1, rng), false);
  }
  if (self_similarity) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    for (const char* name : {"q", "k", "v"}) {
      const std::string w = std::string("self_sim.w") + name;
      auto rng = parameter_rng(seed, w);
      params.add(w, normal_tensor({cfg.d, cfg.d}, stddev, rng), true);
      params.add(std::string("self_sim.b") + name, Tensor({cfg.d}), false);
    }
    params.add("self_sim.gamma", Tensor::scalar(cfg.gamma_init), false);
  }
}

namespace {

Tensor backbone_trunk(const Tensor& image, const ModelParams& params) {
  // Stride-2 stages pad one row/column after the data (SAME padding for even
  // inputs), keeping the conv output size integral.
  Tensor x = pad2d(image, 0, 1, 0, 1);
  x = relu(conv2d(x, params.get("backbone.conv1.weight"), params.get("backbone.conv1.bias"), 2, 0));
  x = pad2d(x, 0, 1, 0, 1);
  x = relu(conv2d(x, params.get("backbone.conv2.weight"), params.get("backbone.conv2.bias"), 2, 0));
  x = relu(conv2d(x, params.get("backbone.conv3.weight"), params.get("backbone.conv3.bias"), 1, 1));
  return x;
}

void check_image(const Tensor& image, const BackboneConfig& cfg, const char* what) {
  if (image.rank() != 3 || image.dim(0) != cfg.in_channels) {
    throw ConfigError(std::string(what) + ": expected [" + std::to_string(cfg.in_channels) + ",h,w], got " +
                      to_string(image.shape()));
  }
}

}  // namespace

FeatureField extract_query_features(const Tensor& image, const ModelParams& params, const BackboneConfig& cfg) {
  check_image(image, cfg, "query image");
  if (image.dim(1) % BackboneConfig::kStride != 0 || image.dim(2) % BackboneConfig::kStride != 0) {
    throw ConfigError("query image " + to_string(image.shape()) + " is not a multiple of the backbone stride " +
                      std::to_string(BackboneConfig::kStride));
  }
  Tensor trunk = backbone_trunk(image, params);
  Tensor features = conv2d(trunk, params.get("query_proj.weight"), params.get("query_proj.bias"), 1, 0);
  return {features, BackboneConfig::kStride};
}

Tensor extract_exemplar_feature(const Tensor& crop, const ModelParams& params, const BackboneConfig& cfg) {
  check_image(crop, cfg, "exemplar crop");
  if (crop.dim(1) != cfg.exemplar_size || crop.dim(2) != cfg.exemplar_size) {
    throw ContractError("exemplar crop must be " + std::to_string(cfg.exemplar_size) + "x" +
                        std::to_string(cfg.exemplar_size) + ", got " + to_string(crop.shape()));
  }
  Tensor pooled = global_avg_pool(backbone_trunk(crop, params));
  const std::size_t c = pooled.dim(0);
  Tensor mapped = matmul(params.get("exemplar_proj.weight"), reshape(pooled, {c, 1}));
  return add(reshape(mapped, {mapped.dim(0)}), params.get("exemplar_proj.bias"));
}

Tensor crop_and_resize(const Tensor& image, const Box& box, std::size_t size) {
  if (image.rank() != 3) throw DimensionError("crop_and_resize: expected [c,h,w], got " + to_string(image.shape()));
  const auto h = static_cast<int>(image.dim(1)), w = static_cast<int>(image.dim(2));
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > w || box.y1 > h || box.width() <= 0 || box.height() <= 0) {
    throw ContractError("crop_and_resize: box [" + std::to_string(box.x0) + "," + std::to_string(box.y0) + "," +
                        std::to_string(box.x1) + "," + std::to_string(box.y1) + "] outside image " +
                        to_string(image.shape()));
  }
  if (size == 0) throw ContractError("crop_and_resize: size must be positive");
  const std::size_t c = image.dim(0);
  Tensor out({c, size, size});
  auto dst = out.mutable_data();
  const auto src = image.data();
  const auto bw = static_cast<std::size_t>(box.width()), bh = static_cast<std::size_t>(box.height());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < size; ++i) {
      const std::size_t sy = static_cast<std::size_t>(box.y0) + ((2 * i + 1) * bh) / (2 * size);
      for (std::size_t j = 0; j < size; ++j) {
        const std::size_t sx = static_cast<std::size_t>(box.x0) + ((2 * j + 1) * bw) / (2 * size);
        dst[(ch * size + i) * size + j] = src[(ch * image.dim(1) + sy) * image.dim(2) + sx];
      }
    }
  }
  return out;
}

std::size_t scale_level(std::size_t h_z, std::size_t w_z, std::size_t h_x, std::size_t w_x, std::size_t l_total) {
  if (h_z == 0 || w_z == 0 || h_x == 0 || w_x == 0 || l_total == 0) {
    throw ContractError("scale_level: dimensions must be positive");
  }
  // Exact integer form of floor((h_z/(2 h_x) + w_z/(2 w_x)) * l_total).
  const std::size_t level = (l_total * (h_z * w_x + w_z * h_x)) / (2 * h_x * w_x);
  return std::min(l_total - 1, level);
}

Tensor apply_scale_embedding(const Tensor& feature, std::size_t level, const Tensor& embeddings) {
  if (embeddings.rank() != 2 || feature.rank() != 1 || embeddings.dim(1) != feature.dim(0)) {
    throw DimensionError("apply_scale_embedding: table " + to_string(embeddings.shape()) + " vs feature " +
                         to_string(feature.shape()));
  }
  if (level >= embeddings.dim(0)) {
    throw ContractError("scale level " + std::to_string(level) + " outside [0, " +
                        std::to_string(embeddings.dim(0)) + ")");
  }
  return add(feature, reshape(slice(embeddings, level, level + 1), {feature.dim(0)}));
}

SelfSimilarityParams SelfSimilarityParams::from(const ModelParams& params) {
  return {params.get("self_sim.wq"), params.get("self_sim.bq"), params.get("self_sim.wk"),
          params.get("self_sim.bk"), params.get("self_sim.wv"), params.get("self_sim.bv"),
          params.get("self_sim.gamma")};
}

SelfSimilarityOutput self_similarity(const FeatureField& field, std::span<const Tensor> exemplars,
                                     const SelfSimilarityParams& p) {
  if (exemplars.empty()) throw ContractError("self_similarity: at least one exemplar vector required");
  const std::size_t d = field.channels(), h = field.height(), w = field.width(), hw = h * w;
  for (const Tensor& z : exemplars) {
    if (z.rank() != 1 || z.dim(0) != d) {
      throw DimensionError("self_similarity: exemplar " + to_string(z.shape()) + " vs field width " + std::to_string(d));
    }
  }

  const std::vector<Tensor> parts{transpose(reshape(field.map, {d, hw})), stack(exemplars)};
  Tensor tokens = concat(parts);  // [N, d]

  Tensor q = add_row_bias(matmul(tokens, p.wq), p.bq);
  Tensor k = add_row_bias(matmul(tokens, p.wk), p.bk);
  Tensor v = add_row_bias(matmul(tokens, p.wv), p.bv);
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d)));
  Tensor attention = softmax_rows(scores);
  Tensor updated = add(tokens, scale_by(matmul(attention, v), p.gamma));

  SelfSimilarityOutput out;
  out.field = {reshape(transpose(slice(updated, 0, hw)), {d, h, w}), field.stride};
  out.exemplars.reserve(exemplars.size());
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    out.exemplars.push_back(reshape(slice(updated, hw + i, hw + i + 1), {d}));
  }
  out.attention = attention;
  return out;
}

}  // namespace simcount
