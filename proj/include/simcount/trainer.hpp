#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simcount/losses.hpp"
#include "simcount/model.hpp"
#include "simcount/optimizer.hpp"
#include "simcount/synthetic_tasks.hpp"

namespace simcount {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::size_t n_exemplars = 3;
  // Stops after this many optimizer steps when non-zero.
  std::size_t max_steps = 0;
  OptimConfig optim{};
  // Fixed similarity-loss weight; unset means scale once on the first batch
  // so that alpha * L_sim matches L_count.
  std::optional<double> alpha;
  LabelRule label_rule = LabelRule::kAtLeastOne;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

struct LossRecord {
  std::size_t step = 0, epoch = 0;
  double count = 0, sim = 0, total = 0;  // batch means
};

struct TrainResult {
  ModelParams params;
  std::vector<LossRecord> history;
  double alpha = 0.0;
};

// Batch order per epoch is a seeded shuffle; each optimizer step averages
// the per-task losses of one batch.
TrainResult train(const ModelConfig& model_cfg, std::span<const CountingTask> tasks, const TrainConfig& cfg);

// Continues from existing parameters.
TrainResult train_from(ModelParams params, const ModelConfig& model_cfg, std::span<const CountingTask> tasks,
                       const TrainConfig& cfg);

// Per-task loss terms at the current parameters, with the graph attached.
struct TaskLoss {
  Tensor count, sim;
};
TaskLoss task_losses(const ModelParams& params, const ModelConfig& model_cfg, const CountingTask& task,
                     const TrainConfig& cfg);

// Zero-pads every task of a mixed-size batch to the largest height and width
// (rounded up to the backbone stride). Dots and boxes keep their coordinates.
std::vector<CountingTask> pad_batch(std::span<const CountingTask> batch, std::size_t multiple);

struct TaskEval {
  std::size_t task_id = 0;
  double gt_count = 0, predicted_count = 0;
  Tensor density, similarity;  // only kept on request
};

struct EvalReport {
  double mae = 0;
  double mse = 0;  // root of the mean squared error
  std::vector<TaskEval> per_task;  // ordered by task id
  std::string fingerprint;
};

struct EvalOptions {
  bool keep_maps = false;
};

// Task ids are positions in `tasks`. Runs in parallel over tasks.
EvalReport evaluate(const ModelParams& params, const ModelConfig& model_cfg, std::span<const CountingTask> tasks,
                    std::size_t n_exemplars, const EvalOptions& options = {});

// MAE and root-mean-squared error of (predicted, gt) pairs.
std::pair<double, double> count_errors(std::span<const double> predicted, std::span<const double> gt);

// Mean absolute error of always predicting the mean train count.
double mean_count_baseline_mae(std::span<const CountingTask> train, std::span<const CountingTask> test);

// Probability that a random POSITIVE position outscores a random NEGATIVE
// one (ties count half).
double ranking_auc(std::span<const double> scores, std::span<const Mark> marks);

// Mean ranking AUC of the aggregated similarity map over tasks that have
// both positive and negative positions.
double similarity_auc(const ModelParams& params, const ModelConfig& model_cfg, std::span<const CountingTask> tasks,
                      std::size_t n_exemplars, LabelRule rule);

std::string config_fingerprint(const ModelParams& params, const ModelConfig& model_cfg, std::size_t n_exemplars);

std::string loss_history_csv(std::span<const LossRecord> history);
std::string loss_history_json(std::span<const LossRecord> history);
std::string eval_report_csv(const EvalReport& report);
std::string eval_report_json(const EvalReport& report);

}  // namespace simcount
