#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "simcount/errors.hpp"
#include "simcount/matching.hpp"
#include "simcount/ops.hpp"
#include "test_util.hpp"

namespace simcount {
namespace {

MetricParams identity_metric(std::size_t d) {
  MetricParams m;
  m.P = Tensor({d, d});
  m.Q = Tensor({d, d});
  for (std::size_t i = 0; i < d; ++i) {
    m.P.mutable_data()[i * d + i] = 1;
    m.Q.mutable_data()[i * d + i] = 1;
  }
  m.b_x = Tensor({d});
  m.b_z = Tensor({d});
  return m;
}

FeatureField single_position(std::vector<double> x) {
  const std::size_t d = x.size();
  return {Tensor({d, 1, 1}, std::move(x)), 4};
}

TEST(Bilinear, IdentityReducesToInnerProduct) {
  EXPECT_EQ(bilinear_similarity(single_position({1, 2}), Tensor({2}, std::vector<double>{3, 4}),
                                identity_metric(2)).item(),
            11);
}

TEST(Bilinear, SwapMatrixHandValue) {
  MetricParams m = identity_metric(2);
  m.P = Tensor({2, 2}, std::vector<double>{0, 1, 1, 0});
  EXPECT_EQ(bilinear_similarity(single_position({1, 0}), Tensor({2}, std::vector<double>{0, 1}), m).item(), 1);
}

TEST(Bilinear, QueryBiasHandValue) {
  MetricParams m = identity_metric(2);
  m.b_x = Tensor({2}, 1.0);
  EXPECT_EQ(bilinear_similarity(single_position({0, 0}), Tensor({2}, 1.0), m).item(), 2);
}

TEST(Bilinear, IdentityMatchesInnerProductOnRandomFields) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + trial % 5, h = 1 + trial % 4, w = 2 + trial % 3;
    Tensor x = normal_tensor({d, h, w}, 1.0, rng), z = normal_tensor({d}, 1.0, rng);
    Tensor s = bilinear_similarity({x, 4}, z, identity_metric(d));
    for (std::size_t p = 0; p < h * w; ++p) {
      double dot = 0;
      for (std::size_t k = 0; k < d; ++k) dot += x.at(k * h * w + p) * z.at(k);
      EXPECT_NEAR(s.at(p), dot, 1e-12);
    }
  }
}

TEST(Bilinear, LinearInExemplarWithoutBias) {
  std::mt19937_64 rng(5);
  ModelParams params;
  init_metric_params(params, 6, false, 2);
  params.get("metric.b_x").mutable_data()[0] = 0.3;
  const MetricParams m = MetricParams::from(params);
  Tensor x = normal_tensor({6, 3, 3}, 1.0, rng), z1 = normal_tensor({6}, 1.0, rng), z2 = normal_tensor({6}, 1.0, rng);
  const double alpha = 0.7, beta = -1.9;
  Tensor mix = add(scale(z1, alpha), scale(z2, beta));
  Tensor lhs = bilinear_similarity({x, 4}, mix, m);
  Tensor s1 = bilinear_similarity({x, 4}, z1, m), s2 = bilinear_similarity({x, 4}, z2, m);
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs.at(i), alpha * s1.at(i) + beta * s2.at(i), 1e-10);
}

TEST(Bilinear, DimensionMismatchIsContractError) {
  EXPECT_THROW(bilinear_similarity(single_position({1, 2, 3}), Tensor({2}), identity_metric(2)), ContractError);
}

struct Dynamic : ::testing::Test {
  ModelParams params;
  std::mt19937_64 rng{6};
  void SetUp() override { init_metric_params(params, 8, true, 4); }
  MetricParams metric() const { return MetricParams::from(params); }
};

TEST_F(Dynamic, ZeroNetworkGivesZeroAttention) {
  for (const char* n : {"metric.attn.w1", "metric.attn.c1", "metric.attn.w2", "metric.attn.c2"}) {
    for (double& v : params.get(n).mutable_data()) v = 0;
  }
  for (double v : values(channel_attention(normal_tensor({8}, 1.0, rng), metric()))) EXPECT_EQ(v, 0.0);
}

TEST_F(Dynamic, AttentionIsBounded) {
  for (int trial = 0; trial < 20; ++trial) {
    for (double v : values(channel_attention(normal_tensor({8}, 2.0, rng), metric()))) EXPECT_LT(std::abs(v), 1.0);
  }
  // Saturated inputs round to exactly +-1 in double precision.
  for (double& v : params.get("metric.attn.w2").mutable_data()) v *= 50;
  for (double v : values(channel_attention(normal_tensor({8}, 10.0, rng), metric()))) EXPECT_LE(std::abs(v), 1.0);
}

TEST_F(Dynamic, IdenticalExemplarsGiveIdenticalAttention) {
  Tensor z = normal_tensor({8}, 1.0, rng);
  Tensor a = channel_attention(z, metric()), b = channel_attention(z.detach(), metric());
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST_F(Dynamic, UnitAttentionEqualsBilinear) {
  FeatureField f{normal_tensor({8, 3, 2}, 1.0, rng), 4};
  Tensor z = normal_tensor({8}, 1.0, rng);
  Tensor dyn = dynamic_similarity(f, z, Tensor({8}, 1.0), metric());
  Tensor bil = bilinear_similarity(f, z, metric());
  for (std::size_t i = 0; i < dyn.size(); ++i) EXPECT_EQ(dyn.at(i), bil.at(i));
}

TEST_F(Dynamic, ZeroAttentionAnnihilates) {
  FeatureField f{normal_tensor({8, 3, 2}, 1.0, rng), 4};
  for (double v : values(dynamic_similarity(f, normal_tensor({8}, 1.0, rng), Tensor({8}), metric()))) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(DynamicHand, SignedAttention) {
  const MetricParams m = identity_metric(2);
  const double s = dynamic_similarity(single_position({1, 1}), Tensor({2}, 1.0),
                                      Tensor({2}, std::vector<double>{1, -1}), m)
                       .item();
  EXPECT_EQ(s, 0.0);
}

TEST(Aggregate, MeanOverExemplars) {
  Tensor maps({2, 1, 2}, std::vector<double>{0, 4, 2, 4});
  Tensor mean = aggregate_exemplars(maps);
  EXPECT_EQ(mean.shape(), (Shape{1, 2}));
  EXPECT_EQ(mean.at(0), 1);
  EXPECT_EQ(mean.at(1), 4);
  Tensor single({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(aggregate_exemplars(single).at(i), single.at(i));
  EXPECT_THROW(aggregate_exemplars(Tensor({2, 2})), ContractError);
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 rng(8);
  Tensor a = normal_tensor({3, 4}, 1.0, rng), b = normal_tensor({3, 4}, 1.0, rng), c = normal_tensor({3, 4}, 1.0, rng);
  Tensor m1 = aggregate_exemplars(stack(std::vector<Tensor>{a, b, c}));
  Tensor m2 = aggregate_exemplars(stack(std::vector<Tensor>{c, a, b}));
  for (std::size_t i = 0; i < m1.size(); ++i) EXPECT_NEAR(m1.at(i), m2.at(i), 1e-15);
}

TEST_F(Dynamic, MatchExemplarsAveragesPerExemplarMaps) {
  FeatureField f{normal_tensor({8, 4, 4}, 1.0, rng), 4};
  std::vector<Tensor> zs{normal_tensor({8}, 1.0, rng), normal_tensor({8}, 1.0, rng), normal_tensor({8}, 1.0, rng)};
  for (bool dynamic : {false, true}) {
    const SimilarityMap s = match_exemplars(f, zs, metric(), dynamic);
    EXPECT_EQ(s.per_exemplar.shape(), (Shape{3, 4, 4}));
    for (std::size_t p = 0; p < 16; ++p) {
      double mean = 0;
      for (std::size_t k = 0; k < 3; ++k) {
        const Tensor single = dynamic ? dynamic_similarity(f, zs[k], metric()) : bilinear_similarity(f, zs[k], metric());
        EXPECT_NEAR(s.per_exemplar.at(k * 16 + p), single.at(p), 1e-12);
        mean += single.at(p) / 3;
      }
      EXPECT_NEAR(s.map.at(p), mean, 1e-12);
    }
  }
}

TEST_F(Dynamic, EveryMetricParameterReceivesGradient) {
  for (const char* n : {"metric.b_x", "metric.b_z", "metric.attn.c1", "metric.attn.c2"}) {
    for (double& v : params.get(n).mutable_data()) v = std::normal_distribution<double>(0, 0.2)(rng);
  }
  FeatureField f{normal_tensor({8, 4, 4}, 1.0, rng), 4};
  Tensor z = normal_tensor({8}, 1.0, rng);
  const std::vector<Mark> marks = [] {
    std::vector<Mark> m(16, Mark::kNegative);
    m[5] = Mark::kPositive;
    return m;
  }();
  backward(log_ratio_loss(reshape(dynamic_similarity(f, z, metric()), {16}), marks));
  for (const auto& p : params.entries()) {
    ASSERT_TRUE(p.tensor.has_grad()) << p.name;
    double norm = 0;
    for (double g : p.tensor.grad()) norm += g * g;
    EXPECT_GT(norm, 0.0) << p.name;
  }
}

TEST(MetricInit, NearIdentity) {
  ModelParams params;
  init_metric_params(params, 16, false, 1);
  const Tensor& P = params.get("metric.P");
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(P.at(i * 16 + j), i == j ? 1.0 : 0.0, 0.06);
  }
  EXPECT_FALSE(params.contains("metric.attn.w1"));
  for (double v : params.get("metric.b_z").data()) EXPECT_EQ(v, 0.0);
}

}  // namespace
}  // namespace simcount
