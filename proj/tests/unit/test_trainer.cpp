#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "simcount/errors.hpp"
#include "simcount/model.hpp"
#include "simcount/trainer.hpp"

namespace simcount {
namespace {

std::vector<CountingTask> small_tasks(std::size_t n, std::uint64_t seed) {
  std::vector<CountingTask> tasks;
  const auto cats = default_categories();
  for (std::size_t i = 0; i < n; ++i) tasks.push_back(generate_task(cats[i % 8], {3, 8}, {32, 32}, seed + i));
  return tasks;
}

TrainConfig quick(std::size_t steps) {
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 2;
  cfg.max_steps = steps;
  cfg.seed = 5;
  return cfg;
}

TEST(CountErrors, HandValues) {
  const std::vector<double> pred{1, 5, 2}, gt{2, 3, 2};
  const auto [mae, rmse] = count_errors(pred, gt);
  EXPECT_DOUBLE_EQ(mae, 1.0);
  EXPECT_DOUBLE_EQ(rmse, std::sqrt(5.0 / 3.0));
  EXPECT_THROW(count_errors(std::vector<double>{1}, gt), ContractError);
}

TEST(Baseline, PredictsMeanTrainCount) {
  std::vector<CountingTask> train(2), test(2);
  train[0].dots.resize(4);
  train[1].dots.resize(8);
  test[0].dots.resize(6);
  test[1].dots.resize(9);
  EXPECT_DOUBLE_EQ(mean_count_baseline_mae(train, test), 1.5);
}

TEST(RankingAuc, HandValues) {
  using M = Mark;
  EXPECT_EQ(ranking_auc(std::vector<double>{3, 1, 2}, std::vector<M>{M::kPositive, M::kNegative, M::kNegative}), 1.0);
  EXPECT_EQ(ranking_auc(std::vector<double>{0, 1}, std::vector<M>{M::kPositive, M::kNegative}), 0.0);
  EXPECT_EQ(ranking_auc(std::vector<double>{1, 1}, std::vector<M>{M::kPositive, M::kNegative}), 0.5);
  EXPECT_EQ(ranking_auc(std::vector<double>{2, 9, 1, 3},
                        std::vector<M>{M::kPositive, M::kIgnored, M::kNegative, M::kNegative}),
            0.5);
  EXPECT_THROW(ranking_auc(std::vector<double>{1}, std::vector<M>{M::kPositive}), ContractError);
}

TEST(RankingAuc, MatchesPairCountingOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> score(0, 5), mark(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(20);
    std::vector<Mark> m(20);
    for (auto& v : s) v = score(rng);
    for (auto& v : m) v = static_cast<Mark>(mark(rng));
    m[0] = Mark::kPositive;
    m[1] = Mark::kNegative;
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::size_t j = 0; j < 20; ++j) {
        if (m[i] != Mark::kPositive || m[j] != Mark::kNegative) continue;
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
    }
    EXPECT_NEAR(ranking_auc(s, m), wins / pairs, 1e-12);
  }
}

TEST(PadBatch, PadsToLargestMultiple) {
  const auto cats = default_categories();
  std::vector<CountingTask> batch{generate_task(cats[0], {3, 5}, {32, 32}, 1),
                                  generate_task(cats[1], {3, 5}, {37, 44}, 2)};
  const auto padded = pad_batch(batch, 4);
  for (const auto& t : padded) EXPECT_EQ(t.image.shape(), (Shape{1, 40, 44}));
  EXPECT_EQ(padded[0].dots, batch[0].dots);
  EXPECT_EQ(padded[0].image.at(32 * 44), 0.0);
  EXPECT_EQ(padded[0].image.at(44 + 3), batch[0].image.at(32 + 3));
}

TEST(Train, DeterministicForSeed) {
  const auto tasks = small_tasks(4, 1);
  const ModelConfig cfg = ModelConfig::bmnet();
  const TrainResult a = train(cfg, tasks, quick(3));
  const TrainResult b = train(cfg, tasks, quick(3));
  ASSERT_EQ(a.history.size(), 3u);
  for (std::size_t k = 0; k < a.params.entries().size(); ++k) {
    const auto x = a.params.entries()[k].tensor.data(), y = b.params.entries()[k].tensor.data();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.history[i].step, i);
    EXPECT_EQ(a.history[i].total, b.history[i].total);
    EXPECT_EQ(a.history[i].sim, 0.0);
  }
  EXPECT_EQ(a.history[2].epoch, 1u);
}

TEST(Train, AutoAlphaBalancesFirstBatch) {
  const auto tasks = small_tasks(3, 2);
  ModelConfig cfg = ModelConfig::bmnet();
  cfg.similarity_loss = true;
  TrainConfig tc = quick(1);
  tc.batch_size = 3;
  const ModelParams init = init_model(cfg, tc.seed);
  double count = 0, sim = 0;
  {
    NoGradGuard guard;
    for (const auto& t : tasks) {
      const TaskLoss l = task_losses(init, cfg, t, tc);
      count += l.count.item();
      sim += l.sim.item();
    }
  }
  const TrainResult r = train(cfg, tasks, tc);
  EXPECT_NEAR(r.alpha, count / sim, 1e-12 * r.alpha);
  EXPECT_NEAR(r.history[0].count * 3, count, 1e-9);
  EXPECT_NEAR(r.history[0].total, r.history[0].count + r.alpha * r.history[0].sim, 1e-12);
  EXPECT_NEAR(r.alpha * r.history[0].sim, r.history[0].count, 1e-9);
}

TEST(Train, FixedAlphaValidated) {
  const auto tasks = small_tasks(2, 3);
  ModelConfig cfg = ModelConfig::bmnet();
  cfg.similarity_loss = true;
  TrainConfig tc = quick(1);
  tc.alpha = -1.0;
  EXPECT_THROW(train(cfg, tasks, tc), ConfigError);
  tc.alpha = 0.25;
  EXPECT_EQ(train(cfg, tasks, tc).alpha, 0.25);
  EXPECT_THROW(train(cfg, std::span<const CountingTask>(), tc), ContractError);
}

TEST(Train, LossFallsOnRepeatedTask) {
  const auto tasks = small_tasks(1, 4);
  TrainConfig tc = quick(40);
  tc.batch_size = 1;
  const TrainResult r = train(ModelConfig::bmnet(), tasks, tc);
  EXPECT_LT(r.history.back().count, r.history.front().count);
}

TEST(Evaluate, MatchesForwardAndCountErrors) {
  const auto tasks = small_tasks(5, 6);
  const ModelConfig cfg = ModelConfig::bmnet_plus();
  const ModelParams params = init_model(cfg, 2);
  const EvalReport rep = evaluate(params, cfg, tasks, 2, {true});
  ASSERT_EQ(rep.per_task.size(), 5u);
  std::vector<double> pred, gt;
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(rep.per_task[i].task_id, i);
    NoGradGuard guard;
    const double direct = forward(params, cfg, tasks[i], 2).density.predicted_count;
    EXPECT_EQ(rep.per_task[i].predicted_count, direct);
    EXPECT_EQ(rep.per_task[i].gt_count, static_cast<double>(tasks[i].gt_count()));
    EXPECT_EQ(rep.per_task[i].density.shape(), (Shape{32, 32}));
    EXPECT_EQ(rep.per_task[i].similarity.shape(), (Shape{8, 8}));
    pred.push_back(direct);
    gt.push_back(static_cast<double>(tasks[i].gt_count()));
  }
  const auto [mae, rmse] = count_errors(pred, gt);
  EXPECT_DOUBLE_EQ(rep.mae, mae);
  EXPECT_DOUBLE_EQ(rep.mse, rmse);
  EXPECT_FALSE(evaluate(params, cfg, tasks, 1).per_task[0].density.defined());
  EXPECT_THROW(evaluate(params, cfg, tasks, 4), ContractError);
}

TEST(Fingerprint, SensitiveToParamsAndExemplars) {
  const ModelConfig cfg = ModelConfig::bmnet();
  ModelParams p = init_model(cfg, 1);
  const std::string base = config_fingerprint(p, cfg, 3);
  EXPECT_EQ(base.size(), 16u);
  EXPECT_EQ(base, config_fingerprint(init_model(cfg, 1), cfg, 3));
  EXPECT_NE(base, config_fingerprint(p, cfg, 2));
  p.entries()[0].tensor.mutable_data()[0] += 1e-12;
  EXPECT_NE(base, config_fingerprint(p, cfg, 3));
}

TEST(Serializers, CsvAndJsonAgree) {
  std::vector<LossRecord> h{{0, 0, 1.5, 0.25, 1.75}, {1, 0, 0.1, 0, 0.1}};
  const std::string csv = loss_history_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,epoch,count_loss,sim_loss,total_loss");
  EXPECT_NE(csv.find("0,0,1.5,0.25,1.75\n"), std::string::npos);
  const auto j = nlohmann::json::parse(loss_history_json(h));
  EXPECT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1]["count_loss"].get<double>(), 0.1);
  EvalReport rep;
  rep.mae = 1;
  rep.per_task.push_back({0, 3, 2.5, {}, {}});
  EXPECT_EQ(eval_report_csv(rep), "task_id,gt_count,predicted_count\n0,3,2.5\n");
  EXPECT_EQ(nlohmann::json::parse(eval_report_json(rep))["per_task"][0]["predicted_count"].get<double>(), 2.5);
}

}  // namespace
}  // namespace simcount
