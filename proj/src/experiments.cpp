#include "simcount/experiments.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "simcount/errors.hpp"

namespace simcount {

ModelConfig Toggles::apply(ModelConfig base) const {
  base.similarity_loss = sl;
  base.self_similarity = ss;
  base.scale_embedding = se;
  base.dynamic_metric = dsm;
  return base;
}

std::string Toggles::label() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(sl, "SL");
  add(ss, "SS");
  add(se, "SE");
  add(dsm, "DSM");
  return out.empty() ? "none" : out;
}

std::vector<Toggles> default_ablation_matrix() {
  return {
      {false, false, false, false},
      {true, false, false, false},
      {true, true, false, false},
      {true, true, true, false},
      {true, true, true, true},
  };
}

namespace {

ExperimentRow train_row(std::string name, const ModelConfig& model, const TrainConfig& train_cfg,
                        const ExperimentData& data) {
  model.validate();
  TrainResult trained = train(model, data.train, train_cfg);
  ExperimentRow row;
  row.name = std::move(name);
  row.model = model;
  row.report = evaluate(trained.params, model, data.eval, train_cfg.n_exemplars);
  row.counter_in_channels = trained.params.get("counter.conv1.weight").dim(1);
  return row;
}

}  // namespace

std::vector<ExperimentRow> run_ablation(const std::vector<Toggles>& matrix, const ModelConfig& base,
                                        const TrainConfig& train_cfg, const ExperimentData& data) {
  std::vector<ExperimentRow> rows;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const ModelConfig model = matrix[i].apply(base);
    rows.push_back(train_row("B" + std::to_string(i + 1) + ":" + matrix[i].label(), model, train_cfg, data));
  }
  return rows;
}

std::vector<ExperimentRow> run_fusion_sweep(const ModelConfig& base, const TrainConfig& train_cfg,
                                            const ExperimentData& data) {
  std::vector<ExperimentRow> rows;
  for (FusionMode mode : {FusionMode::kSOnly, FusionMode::kXZ, FusionMode::kXZS, FusionMode::kXS}) {
    ModelConfig model = base;
    model.fusion = mode;
    // Similarity supervision needs a similarity map.
    if (!uses_similarity(mode)) model.similarity_loss = false;
    rows.push_back(train_row(to_string(mode), model, train_cfg, data));
  }
  return rows;
}

std::vector<EvalReport> exemplar_sweep(const ModelParams& params, const ModelConfig& model,
                                       std::span<const CountingTask> tasks, std::size_t max_exemplars) {
  if (max_exemplars == 0) throw ContractError("exemplar_sweep: max_exemplars must be positive");
  std::vector<EvalReport> out;
  for (std::size_t n = 1; n <= max_exemplars; ++n) out.push_back(evaluate(params, model, tasks, n));
  return out;
}

std::string experiment_table_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = "row,fusion,SL,SS,SE,DSM,counter_in_channels,mae,mse,fingerprint\n";
  char buf[64];
  for (const auto& r : rows) {
    out += r.name + ',' + to_string(r.model.fusion) + ',' + std::to_string(r.model.similarity_loss) + ',' +
           std::to_string(r.model.self_similarity) + ',' + std::to_string(r.model.scale_embedding) + ',' +
           std::to_string(r.model.dynamic_metric) + ',' + std::to_string(r.counter_in_channels) + ',';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", r.report.mae, r.report.mse);
    out += buf + r.report.fingerprint + '\n';
  }
  return out;
}

std::string experiment_table_json(const std::vector<ExperimentRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"row", r.name},
                 {"fusion", to_string(r.model.fusion)},
                 {"SL", r.model.similarity_loss},
                 {"SS", r.model.self_similarity},
                 {"SE", r.model.scale_embedding},
                 {"DSM", r.model.dynamic_metric},
                 {"counter_in_channels", r.counter_in_channels},
                 {"mae", r.report.mae},
                 {"mse", r.report.mse},
                 {"fingerprint", r.report.fingerprint}});
  }
  return j.dump(2) + '\n';
}

}  // namespace simcount
