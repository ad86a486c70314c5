#include "simcount/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "simcount/errors.hpp"
#include "simcount/ops.hpp"
#include "simcount/parameters.hpp"

namespace simcount {

TaskLoss task_losses(const ModelParams& params, const ModelConfig& model_cfg, const CountingTask& task,
                     const TrainConfig& cfg) {
  const std::size_t n = std::min(cfg.n_exemplars, task.exemplar_boxes.size());
  ForwardOutput out = forward(params, model_cfg, task, n);
  const DensityMap gt = render_density_gt(task, cfg.sigma);
  TaskLoss loss;
  loss.count = counting_loss(out.density.map, gt.map);
  if (model_cfg.similarity_loss && out.similarity.per_exemplar.defined()) {
    const SimilarityLabels labels = assign_labels(task.dots, out.field.height(), out.field.width(),
                                                  out.field.stride, cfg.label_rule);
    loss.sim = similarity_loss(out.similarity.per_exemplar, labels, nullptr);
  }
  return loss;
}

namespace {

void check_finite_params(const ModelParams& params, std::size_t step) {
  for (const auto& p : params.entries()) {
    for (double v : p.tensor.data()) {
      if (!std::isfinite(v)) {
        throw TrainingError("parameter '" + p.name + "' became non-finite after step " + std::to_string(step));
      }
    }
  }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0x5eed0000u + epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// alpha such that alpha * L_sim equals L_count on the first batch.
double auto_alpha(const ModelParams& params, const ModelConfig& model_cfg, std::span<const CountingTask> tasks,
                  std::span<const std::size_t> batch, const TrainConfig& cfg) {
  NoGradGuard no_grad;
  double count = 0, sim = 0;
  for (std::size_t idx : batch) {
    TaskLoss l = task_losses(params, model_cfg, tasks[idx], cfg);
    count += l.count.item();
    if (l.sim.defined()) sim += l.sim.item();
  }
  if (!(sim > 0.0) || !std::isfinite(count / sim)) return 1.0;
  return count / sim;
}

}  // namespace

TrainResult train(const ModelConfig& model_cfg, std::span<const CountingTask> tasks, const TrainConfig& cfg) {
  return train_from(init_model(model_cfg, cfg.seed), model_cfg, tasks, cfg);
}

TrainResult train_from(ModelParams params, const ModelConfig& model_cfg, std::span<const CountingTask> tasks,
                       const TrainConfig& cfg) {
  model_cfg.validate();
  if (tasks.empty()) throw ContractError("train: empty train split");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (cfg.n_exemplars == 0) throw ConfigError("n_exemplars must be positive");

  TrainResult result;
  result.alpha = 0.0;
  if (model_cfg.similarity_loss) {
    if (cfg.alpha) {
      if (!(*cfg.alpha >= 0.0) || !std::isfinite(*cfg.alpha)) throw ConfigError("alpha must be finite and >= 0");
      result.alpha = *cfg.alpha;
    } else if (cfg.epochs > 0) {
      const auto order = epoch_order(tasks.size(), cfg.seed, 0);
      const std::size_t first = std::min(cfg.batch_size, order.size());
      result.alpha = auto_alpha(params, model_cfg, tasks, std::span(order).first(first), cfg);
    }
  }
  const bool use_sim = model_cfg.similarity_loss && result.alpha != 0.0;
  const LossWeights weights{use_sim ? result.alpha : 0.0};

  OptimState state = OptimState::for_params(params, cfg.optim);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(tasks.size(), cfg.seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (cfg.max_steps != 0 && step >= cfg.max_steps) break;
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      LossRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      for (std::size_t b = start; b < end; ++b) {
        TaskLoss l = task_losses(params, model_cfg, tasks[order[b]], cfg);
        Tensor sim = use_sim && l.sim.defined() ? l.sim : Tensor::scalar(0.0);
        Tensor total = total_loss(l.count, sim, weights);
        if (!std::isfinite(total.item())) {
          throw TrainingError("non-finite loss in batch " + std::to_string(step) + " (epoch " +
                              std::to_string(epoch) + ", task " + std::to_string(order[b]) +
                              "): count=" + std::to_string(l.count.item()) + " sim=" + std::to_string(sim.item()));
        }
        backward(scale(total, inv_b));
        rec.count += l.count.item() * inv_b;
        rec.sim += sim.item() * inv_b;
        rec.total += total.item() * inv_b;
      }
      optim_step(params, state);
      check_finite_params(params, step);
      result.history.push_back(rec);
      ++step;
    }
    if (cfg.max_steps != 0 && step >= cfg.max_steps) break;
  }
  params.zero_grad();
  result.params = std::move(params);
  return result;
}

std::vector<CountingTask> pad_batch(std::span<const CountingTask> batch, std::size_t multiple) {
  if (multiple == 0) throw ContractError("pad_batch: multiple must be positive");
  std::size_t h = 0, w = 0, c = 0;
  for (const auto& t : batch) {
    if (c != 0 && t.image.dim(0) != c) throw DimensionError("pad_batch: channel counts differ");
    c = t.image.dim(0);
    h = std::max(h, t.height());
    w = std::max(w, t.width());
  }
  h = (h + multiple - 1) / multiple * multiple;
  w = (w + multiple - 1) / multiple * multiple;
  std::vector<CountingTask> out;
  out.reserve(batch.size());
  for (const auto& t : batch) {
    CountingTask p = t;
    p.image = pad2d(t.image.detach(), 0, h - t.height(), 0, w - t.width()).detach();
    out.push_back(std::move(p));
  }
  return out;
}

std::pair<double, double> count_errors(std::span<const double> predicted, std::span<const double> gt) {
  if (predicted.size() != gt.size()) throw ContractError("count_errors: length mismatch");
  if (predicted.empty()) throw ContractError("count_errors: no tasks");
  double abs_sum = 0, sq_sum = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double e = predicted[i] - gt[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const auto n = static_cast<double>(gt.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

EvalReport evaluate(const ModelParams& params, const ModelConfig& model_cfg, std::span<const CountingTask> tasks,
                    std::size_t n_exemplars, const EvalOptions& options) {
  if (tasks.empty()) throw ContractError("evaluate: empty task list");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (n_exemplars == 0 || n_exemplars > tasks[i].exemplar_boxes.size()) {
      throw ContractError("evaluate: task " + std::to_string(i) + " has " +
                          std::to_string(tasks[i].exemplar_boxes.size()) + " exemplar boxes, " +
                          std::to_string(n_exemplars) + " requested");
    }
  }
  EvalReport report;
  report.per_task.resize(tasks.size());
  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    NoGradGuard no_grad;
    const auto& task = tasks[static_cast<std::size_t>(i)];
    ForwardOutput out = forward(params, model_cfg, task, n_exemplars);
    TaskEval& rec = report.per_task[static_cast<std::size_t>(i)];
    rec.task_id = static_cast<std::size_t>(i);
    rec.gt_count = static_cast<double>(task.gt_count());
    rec.predicted_count = out.density.predicted_count;
    if (options.keep_maps) {
      rec.density = out.density.map.detach();
      if (out.similarity.map.defined()) rec.similarity = out.similarity.map.detach();
    }
  }
  std::vector<double> pred, gt;
  for (const auto& r : report.per_task) {
    pred.push_back(r.predicted_count);
    gt.push_back(r.gt_count);
  }
  std::tie(report.mae, report.mse) = count_errors(pred, gt);
  report.fingerprint = config_fingerprint(params, model_cfg, n_exemplars);
  return report;
}

double mean_count_baseline_mae(std::span<const CountingTask> train, std::span<const CountingTask> test) {
  if (train.empty() || test.empty()) throw ContractError("mean_count_baseline_mae: empty split");
  double mean = 0;
  for (const auto& t : train) mean += static_cast<double>(t.gt_count());
  mean /= static_cast<double>(train.size());
  double mae = 0;
  for (const auto& t : test) mae += std::abs(mean - static_cast<double>(t.gt_count()));
  return mae / static_cast<double>(test.size());
}

double ranking_auc(std::span<const double> scores, std::span<const Mark> marks) {
  if (scores.size() != marks.size()) throw ContractError("ranking_auc: length mismatch");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    if (marks[i] != Mark::kIgnored) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U from average ranks.
  double pos_rank_sum = 0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (marks[idx[k]] == Mark::kPositive) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw ContractError("ranking_auc: need both positive and negative positions");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1) / 2) / (np * nn);
}

double similarity_auc(const ModelParams& params, const ModelConfig& model_cfg, std::span<const CountingTask> tasks,
                      std::size_t n_exemplars, LabelRule rule) {
  if (!uses_similarity(model_cfg.fusion)) throw ConfigError("similarity_auc: model computes no similarity map");
  const EvalReport report = evaluate(params, model_cfg, tasks, n_exemplars, {.keep_maps = true});
  double sum = 0;
  std::size_t used = 0;
  for (const auto& rec : report.per_task) {
    const CountingTask& task = tasks[rec.task_id];
    const SimilarityLabels labels = assign_labels(task.dots, rec.similarity.dim(0), rec.similarity.dim(1),
                                                  task.height() / rec.similarity.dim(0), rule);
    if (labels.count(Mark::kPositive) == 0 || labels.count(Mark::kNegative) == 0) continue;
    sum += ranking_auc(rec.similarity.data(), labels.marks);
    ++used;
  }
  if (used == 0) throw ContractError("similarity_auc: no task has both positive and negative positions");
  return sum / static_cast<double>(used);
}

std::string config_fingerprint(const ModelParams& params, const ModelConfig& model_cfg, std::size_t n_exemplars) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  const std::string desc = model_cfg.describe() + " n=" + std::to_string(n_exemplars);
  feed(desc.data(), desc.size());
  for (const auto& p : params.entries()) {
    feed(p.name.data(), p.name.size());
    for (double v : p.tensor.data()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      feed(&bits, sizeof bits);
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string loss_history_csv(std::span<const LossRecord> history) {
  std::string out = "step,epoch,count_loss,sim_loss,total_loss\n";
  for (const auto& r : history) {
    out += std::to_string(r.step) + ',' + std::to_string(r.epoch) + ',' + real(r.count) + ',' + real(r.sim) + ',' +
           real(r.total) + '\n';
  }
  return out;
}

std::string loss_history_json(std::span<const LossRecord> history) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : history) {
    j.push_back({{"step", r.step}, {"epoch", r.epoch}, {"count_loss", r.count}, {"sim_loss", r.sim},
                 {"total_loss", r.total}});
  }
  return j.dump(2) + '\n';
}

std::string eval_report_csv(const EvalReport& report) {
  std::string out = "task_id,gt_count,predicted_count\n";
  for (const auto& r : report.per_task) {
    out += std::to_string(r.task_id) + ',' + real(r.gt_count) + ',' + real(r.predicted_count) + '\n';
  }
  return out;
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& r : report.per_task) {
    tasks.push_back({{"task_id", r.task_id}, {"gt_count", r.gt_count}, {"predicted_count", r.predicted_count}});
  }
  nlohmann::json j = {{"mae", report.mae}, {"mse", report.mse}, {"fingerprint", report.fingerprint},
                      {"per_task", tasks}};
  return j.dump(2) + '\n';
}

}  // namespace simcount
