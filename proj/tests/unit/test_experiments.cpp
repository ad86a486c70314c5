#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "simcount/errors.hpp"
#include "simcount/experiments.hpp"

namespace simcount {
namespace {

ExperimentData tiny_data() {
  ExperimentData d;
  const auto cats = default_categories();
  for (std::uint64_t i = 0; i < 2; ++i) d.train.push_back(generate_task(cats[i], {3, 6}, {32, 32}, i));
  for (std::uint64_t i = 0; i < 2; ++i) d.eval.push_back(generate_task(cats[9], {3, 6}, {32, 32}, 10 + i));
  return d;
}

TrainConfig one_step() {
  TrainConfig t;
  t.epochs = 1;
  t.batch_size = 2;
  t.max_steps = 1;
  t.seed = 3;
  return t;
}

TEST(Toggles, MatrixAndLabels) {
  const auto m = default_ablation_matrix();
  ASSERT_EQ(m.size(), 5u);
  EXPECT_EQ(m[0].label(), "none");
  EXPECT_EQ(m[1].label(), "SL");
  EXPECT_EQ(m[4].label(), "SL+SS+SE+DSM");
  for (std::size_t i = 1; i < m.size(); ++i) {
    // Each row adds exactly one switch to the previous one.
    const int prev = m[i - 1].sl + m[i - 1].ss + m[i - 1].se + m[i - 1].dsm;
    const int cur = m[i].sl + m[i].ss + m[i].se + m[i].dsm;
    EXPECT_EQ(cur, prev + 1);
    EXPECT_NO_THROW(m[i].apply(ModelConfig::bmnet()).validate());
  }
  const ModelConfig full = m[4].apply(ModelConfig::bmnet());
  EXPECT_TRUE(full.similarity_loss && full.self_similarity && full.scale_embedding && full.dynamic_metric);
}

TEST(Ablation, RowsNamedAndDeterministic) {
  const auto data = tiny_data();
  const auto rows = run_ablation(default_ablation_matrix(), ModelConfig::bmnet(), one_step(), data);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0].name, "B1:none");
  EXPECT_EQ(rows[4].name, "B5:SL+SS+SE+DSM");
  for (const auto& r : rows) {
    EXPECT_EQ(r.report.per_task.size(), 2u);
    EXPECT_EQ(r.counter_in_channels, 33u);
  }
  const auto again = run_ablation({default_ablation_matrix()[2]}, ModelConfig::bmnet(), one_step(), data);
  EXPECT_EQ(again[0].report.fingerprint, rows[2].report.fingerprint);
  EXPECT_EQ(again[0].report.mae, rows[2].report.mae);
}

TEST(FusionSweep, ChannelCountsPerMode) {
  ModelConfig base = ModelConfig::bmnet();
  base.similarity_loss = true;
  const auto rows = run_fusion_sweep(base, one_step(), tiny_data());
  ASSERT_EQ(rows.size(), 4u);
  const std::vector<std::size_t> channels{1, 64, 65, 33};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(rows[i].counter_in_channels, channels[i]) << rows[i].name;
  EXPECT_FALSE(rows[1].model.similarity_loss);
  EXPECT_TRUE(rows[3].model.similarity_loss);
  const auto csv = experiment_table_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  const auto j = nlohmann::json::parse(experiment_table_json(rows));
  EXPECT_EQ(j.size(), 4u);
  EXPECT_EQ(j[0]["fusion"], to_string(FusionMode::kSOnly));
}

TEST(ExemplarSweep, OneReportPerCount) {
  const auto data = tiny_data();
  const ModelConfig cfg = ModelConfig::bmnet();
  const ModelParams params = init_model(cfg, 1);
  const auto reports = exemplar_sweep(params, cfg, data.eval, 3);
  ASSERT_EQ(reports.size(), 3u);
  for (std::size_t n = 0; n < 3; ++n) EXPECT_EQ(reports[n].mae, evaluate(params, cfg, data.eval, n + 1).mae);
  EXPECT_THROW(exemplar_sweep(params, cfg, data.eval, 0), ContractError);
}

}  // namespace
}  // namespace simcount
