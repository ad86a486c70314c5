#pragma once

#include <string>
#include <vector>

#include "simcount/trainer.hpp"

namespace simcount {

struct Toggles {
  bool sl = false, ss = false, se = false, dsm = false;

  ModelConfig apply(ModelConfig base) const;
  std::string label() const;  // e.g. "SL+SS"
};

// Rows B1..B5: {}, {SL}, {SL,SS}, {SL,SS,SE}, {SL,SS,SE,DSM}.
std::vector<Toggles> default_ablation_matrix();

struct ExperimentRow {
  std::string name;
  ModelConfig model;
  EvalReport report;
  std::size_t counter_in_channels = 0;
};

struct ExperimentData {
  std::vector<CountingTask> train, eval;
};

// Each row trains from the same seed and evaluates on `data.eval`.
std::vector<ExperimentRow> run_ablation(const std::vector<Toggles>& matrix, const ModelConfig& base,
                                        const TrainConfig& train_cfg, const ExperimentData& data);

// One row per fusion mode, in the order s, xz, xzs, xs.
std::vector<ExperimentRow> run_fusion_sweep(const ModelConfig& base, const TrainConfig& train_cfg,
                                            const ExperimentData& data);

// Evaluates one trained model with 1..max_exemplars exemplars.
std::vector<EvalReport> exemplar_sweep(const ModelParams& params, const ModelConfig& model,
                                       std::span<const CountingTask> tasks, std::size_t max_exemplars);

std::string experiment_table_csv(const std::vector<ExperimentRow>& rows);
std::string experiment_table_json(const std::vector<ExperimentRow>& rows);

}  // namespace simcount
