#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simcount/counting.hpp"
#include "simcount/matching.hpp"
#include "simcount/parameters.hpp"
#include "simcount/representation.hpp"
#include "simcount/synthetic_tasks.hpp"

namespace simcount {

// Architecture toggles. `similarity_loss` lives here as well because it is
// one of the four ablation switches, even though it only affects training.
struct ModelConfig {
  BackboneConfig backbone{};
  CounterConfig counter{};
  FusionMode fusion = FusionMode::kXS;
  bool self_similarity = false;  // SS
  bool scale_embedding = false;  // SE
  bool dynamic_metric = false;   // DSM
  bool similarity_loss = false;  // SL

  static ModelConfig bmnet();
  static ModelConfig bmnet_plus();

  // SE requires SS; SL requires a fusion mode that computes S.
  void validate() const;
  std::string describe() const;
};

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed);

struct ForwardOutput {
  DensityMap density;
  SimilarityMap similarity;  // undefined tensors in x+z mode
  FeatureField field;        // after self-similarity, if enabled
  std::vector<Tensor> exemplars;
};

// Uses the first `n_exemplars` boxes of the task.
ForwardOutput forward(const ModelParams& params, const ModelConfig& cfg, const CountingTask& task,
                      std::size_t n_exemplars);

}  // namespace simcount
