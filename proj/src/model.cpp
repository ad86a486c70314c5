#include "simcount/model.hpp"

#include <sstream>

#include "simcount/errors.hpp"
#include "simcount/ops.hpp"

namespace simcount {

ModelConfig ModelConfig::bmnet() { return ModelConfig{}; }

ModelConfig ModelConfig::bmnet_plus() {
  ModelConfig cfg;
  cfg.self_similarity = true;
  cfg.scale_embedding = true;
  cfg.dynamic_metric = true;
  cfg.similarity_loss = true;
  return cfg;
}

void ModelConfig::validate() const {
  backbone.validate();
  if (scale_embedding && !self_similarity) {
    throw ConfigError("scale embedding (SE) requires the self-similarity module (SS)");
  }
  if (similarity_loss && !uses_similarity(fusion)) {
    throw ConfigError("similarity loss (SL) needs a fusion mode that includes the similarity map");
  }
  if (counter.width == 0 || counter.min_width == 0) throw ConfigError("counter widths must be positive");
}

std::string ModelConfig::describe() const {
  std::ostringstream os;
  os << "d=" << backbone.d << " widths=" << backbone.widths[0] << '/' << backbone.widths[1] << '/'
     << backbone.widths[2] << " l_total=" << backbone.l_total << " fusion=" << to_string(fusion)
     << " SL=" << similarity_loss << " SS=" << self_similarity << " SE=" << scale_embedding
     << " DSM=" << dynamic_metric;
  return os.str();
}

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams params;
  init_representation_params(params, cfg.backbone, cfg.self_similarity, cfg.scale_embedding, seed);
  if (uses_similarity(cfg.fusion)) init_metric_params(params, cfg.backbone.d, cfg.dynamic_metric, seed);
  init_counter_params(params, fused_channels(cfg.fusion, cfg.backbone.d), BackboneConfig::kStride, cfg.counter, seed);
  return params;
}

ForwardOutput forward(const ModelParams& params, const ModelConfig& cfg, const CountingTask& task,
                      std::size_t n_exemplars) {
  if (n_exemplars == 0 || n_exemplars > task.exemplar_boxes.size()) {
    throw ContractError("forward: " + std::to_string(n_exemplars) + " exemplars requested, task has " +
                        std::to_string(task.exemplar_boxes.size()));
  }
  ForwardOutput out;
  out.field = extract_query_features(task.image, params, cfg.backbone);

  const std::size_t h_x = task.height(), w_x = task.width();
  out.exemplars.reserve(n_exemplars);
  for (std::size_t i = 0; i < n_exemplars; ++i) {
    const Box& box = task.exemplar_boxes[i];
    Tensor z = extract_exemplar_feature(crop_and_resize(task.image, box, cfg.backbone.exemplar_size), params,
                                        cfg.backbone);
    if (cfg.scale_embedding) {
      const std::size_t level = scale_level(static_cast<std::size_t>(box.height()),
                                            static_cast<std::size_t>(box.width()), h_x, w_x, cfg.backbone.l_total);
      z = apply_scale_embedding(z, level, params.get("scale_embedding"));
    }
    out.exemplars.push_back(z);
  }

  if (cfg.self_similarity) {
    SelfSimilarityOutput refined = self_similarity(out.field, out.exemplars, SelfSimilarityParams::from(params));
    out.field = refined.field;
    out.exemplars = std::move(refined.exemplars);
  }

  if (uses_similarity(cfg.fusion)) {
    out.similarity = match_exemplars(out.field, out.exemplars, MetricParams::from(params), cfg.dynamic_metric);
  }
  Tensor mean_exemplar;
  if (cfg.fusion == FusionMode::kXZ || cfg.fusion == FusionMode::kXZS) {
    mean_exemplar = mean_axis0(stack(out.exemplars));
  }
  Tensor fused = fuse(out.field, mean_exemplar, out.similarity.map, cfg.fusion);
  out.density = counter_forward(fused, params, out.field.stride);
  return out;
}

}  // namespace simcount
