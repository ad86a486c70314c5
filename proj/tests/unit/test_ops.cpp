#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "simcount/errors.hpp"
#include "simcount/ops.hpp"
#include "simcount/parameters.hpp"
#include "test_util.hpp"

namespace simcount {
namespace {

Tensor t2(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor({r, c}, std::move(v)); }

void expect_values(const Tensor& t, const std::vector<double>& want, double tol = 1e-12) {
  ASSERT_EQ(t.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(t.at(i), want[i], tol) << "index " << i;
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  expect_values(matmul(t2(2, 2, {1, 0, 0, 1}), t2(2, 2, {1, 2, 3, 4})), {1, 2, 3, 4}, 0);
}

TEST(Matmul, HandComputedProduct) {
  Tensor out = matmul(t2(2, 2, {1, 2, 3, 4}), t2(2, 1, {5, 6}));
  EXPECT_EQ(out.shape(), (Shape{2, 1}));
  expect_values(out, {17, 39}, 0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2,3]"), std::string::npos);
  }
}

TEST(Conv2d, UnitKernelIsIdentity) {
  Tensor in({1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor out = conv2d(in, Tensor({1, 1, 1, 1}, 1.0), Tensor({1}), 1, 0);
  expect_values(out, {1, 2, 3, 4, 5, 6, 7, 8, 9}, 0);
}

TEST(Conv2d, OnesKernelOnConstantInputGivesNineC) {
  const double c = 0.7;
  Tensor out = conv2d(Tensor({1, 5, 5}, c), Tensor({1, 1, 3, 3}, 1.0), Tensor({1}), 1, 0);
  EXPECT_EQ(out.shape(), (Shape{1, 3, 3}));
  for (double v : out.data()) EXPECT_NEAR(v, 9 * c, 1e-12);
}

TEST(Conv2d, StrideTwoOutputSize) {
  Tensor out = conv2d(Tensor({1, 5, 5}, 1.0), Tensor({2, 1, 3, 3}, 1.0), Tensor(), 2, 0);
  EXPECT_EQ(out.shape(), (Shape{2, 2, 2}));
}

TEST(Conv2d, PaddingTreatsBorderAsZero) {
  Tensor out = conv2d(Tensor({1, 2, 2}, 1.0), Tensor({1, 1, 3, 3}, 1.0), Tensor({1}, 0.5), 1, 1);
  expect_values(out, {4.5, 4.5, 4.5, 4.5});
}

TEST(Conv2d, ConfigurationErrors) {
  EXPECT_THROW(conv2d(Tensor({1, 6, 6}), Tensor({1, 1, 3, 3}), Tensor(), 2, 0), ConfigError);
  EXPECT_THROW(conv2d(Tensor({1, 5, 5}), Tensor({1, 1, 2, 2}), Tensor(), 1, 0), ConfigError);
  EXPECT_THROW(conv2d(Tensor({1, 5, 5}), Tensor({1, 1, 3, 3}), Tensor(), 0, 0), ConfigError);
  EXPECT_THROW(conv2d(Tensor({2, 5, 5}), Tensor({1, 1, 3, 3}), Tensor(), 1, 0), DimensionError);
  EXPECT_THROW(conv2d(Tensor({1, 5, 5}), Tensor({1, 1, 3, 3}), Tensor({2}), 1, 0), DimensionError);
}

TEST(GlobalAvgPool, Examples) {
  expect_values(global_avg_pool(Tensor({2, 3, 3}, 2.5)), {2.5, 2.5});
  expect_values(global_avg_pool(Tensor({1, 2, 2}, std::vector<double>{0, 2, 4, 6})), {3});
  expect_values(global_avg_pool(Tensor({3, 1, 1}, std::vector<double>{1, -2, 5})), {1, -2, 5}, 0);
}

TEST(GlobalAvgPool, GradientIsUniform) {
  Tensor x = Tensor({1, 2, 2}).set_requires_grad(true);
  backward(sum(global_avg_pool(x)));
  for (double g : x.grad()) EXPECT_DOUBLE_EQ(g, 0.25);
}

TEST(BilinearUpsample, ConstantStaysConstant) {
  Tensor out = bilinear_upsample(Tensor({2, 3, 4}, 0.3), 2);
  EXPECT_EQ(out.shape(), (Shape{2, 6, 8}));
  for (double v : out.data()) EXPECT_EQ(v, 0.3);
}

TEST(BilinearUpsample, CornerAlignedRow) {
  Tensor out = bilinear_upsample(Tensor({1, 1, 2}, std::vector<double>{0, 2}), 2);
  // Both rows of the 2x4 output are the interpolated row.
  expect_values(out, {0, 2.0 / 3, 4.0 / 3, 2, 0, 2.0 / 3, 4.0 / 3, 2});
}

TEST(BilinearUpsample, FactorOneIsIdentity) {
  Tensor in({1, 2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  expect_values(bilinear_upsample(in, 1), {1, 2, 3, 4, 5, 6}, 0);
  EXPECT_THROW(bilinear_upsample(in, 0), ContractError);
}

TEST(Elementwise, Examples) {
  expect_values(relu(Tensor({3}, std::vector<double>{-1, 0, 2})), {0, 0, 2}, 0);
  EXPECT_EQ(tanh(Tensor({1}, 0.0)).item(), 0.0);
  for (double v : values(tanh(Tensor({3}, std::vector<double>{-50, 3, 50})))) {
    EXPECT_LE(std::abs(v), 1.0);
  }
  for (double v : values(tanh(Tensor({2}, std::vector<double>{-5, 5})))) EXPECT_LT(std::abs(v), 1.0);
  expect_values(hadamard(Tensor({3}, std::vector<double>{1, 2, 3}), Tensor({3}, std::vector<double>{4, 5, 6})),
                {4, 10, 18}, 0);
  EXPECT_THROW(add(Tensor({3}), Tensor({2})), DimensionError);
  EXPECT_THROW(hadamard(Tensor({3}), Tensor({3, 1})), DimensionError);
}

TEST(Softmax, Examples) {
  expect_values(softmax(Tensor({4}, 1.3)), {0.25, 0.25, 0.25, 0.25});
  expect_values(softmax(Tensor({2}, std::vector<double>{0, std::log(3.0)})), {0.25, 0.75});
  expect_values(softmax(Tensor({1}, 42.0)), {1.0}, 0);
}

TEST(Softmax, StableAndNormalized) {
  Tensor out = softmax(Tensor({3}, std::vector<double>{1000, 1001, -1000}));
  double total = 0;
  for (double v : out.data()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    total += v;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(SoftmaxRows, EachRowSumsToOne) {
  std::mt19937_64 rng(3);
  Tensor out = softmax_rows(normal_tensor({4, 7}, 5.0, rng));
  for (std::size_t r = 0; r < 4; ++r) {
    double total = 0;
    for (std::size_t c = 0; c < 7; ++c) total += out.at(r * 7 + c);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Pad2d, PlacesInputAtOffset) {
  Tensor out = pad2d(Tensor({1, 1, 1}, 5.0), 1, 0, 0, 2);
  EXPECT_EQ(out.shape(), (Shape{1, 2, 3}));
  expect_values(out, {0, 0, 0, 5, 0, 0}, 0);
}

TEST(Structural, ConcatSliceStack) {
  Tensor a = t2(1, 2, {1, 2}), b = t2(2, 2, {3, 4, 5, 6});
  Tensor c = concat(std::vector<Tensor>{a, b});
  EXPECT_EQ(c.shape(), (Shape{3, 2}));
  expect_values(slice(c, 1, 3), {3, 4, 5, 6}, 0);
  Tensor s = stack(std::vector<Tensor>{Tensor({2}, 1.0), Tensor({2}, 3.0)});
  EXPECT_EQ(s.shape(), (Shape{2, 2}));
  expect_values(mean_axis0(s), {2, 2}, 0);
  EXPECT_THROW(slice(c, 2, 4), ContractError);
  EXPECT_THROW(concat(std::vector<Tensor>{a, Tensor({1, 3})}), DimensionError);
}

TEST(Structural, BiasAndTiling) {
  expect_values(add_channel_bias(Tensor({2, 1, 2}), Tensor({2}, std::vector<double>{1, 2})), {1, 1, 2, 2}, 0);
  expect_values(add_row_bias(Tensor({2, 2}), Tensor({2}, std::vector<double>{1, 2})), {1, 2, 1, 2}, 0);
  Tensor tiled = tile_spatial(Tensor({2}, std::vector<double>{7, 8}), 1, 3);
  EXPECT_EQ(tiled.shape(), (Shape{2, 1, 3}));
  expect_values(tiled, {7, 7, 7, 8, 8, 8}, 0);
}

TEST(LogRatioLoss, Examples) {
  const std::vector<Mark> pn{Mark::kPositive, Mark::kNegative};
  EXPECT_NEAR(log_ratio_loss(Tensor({2}, 0.4), pn).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(log_ratio_loss(Tensor({2}, std::vector<double>{10, 0}), pn).item(), std::log1p(std::exp(-10.0)),
              1e-15);
  const std::vector<Mark> ppnn{Mark::kPositive, Mark::kPositive, Mark::kNegative, Mark::kNegative};
  EXPECT_NEAR(log_ratio_loss(Tensor({4}, 0.0), ppnn).item(), std::log(2.0), 1e-12);
}

TEST(LogRatioLoss, IgnoredEntriesDoNotContribute) {
  const std::vector<Mark> marks{Mark::kPositive, Mark::kIgnored, Mark::kNegative};
  EXPECT_NEAR(log_ratio_loss(Tensor({3}, std::vector<double>{0, 100, 0}), marks).item(), std::log(2.0), 1e-12);
}

TEST(LogRatioLoss, FarApartScoresStayFinite) {
  const std::vector<Mark> pn{Mark::kPositive, Mark::kNegative};
  const double loss = log_ratio_loss(Tensor({2}, std::vector<double>{-800, 800}), pn).item();
  EXPECT_NEAR(loss, 1600.0, 1e-9);
}

TEST(LogRatioLoss, NoPositivesGivesZero) {
  const std::vector<Mark> nn{Mark::kNegative, Mark::kNegative};
  Tensor s = Tensor({2}, 1.0).set_requires_grad(true);
  Tensor loss = log_ratio_loss(s, nn);
  EXPECT_EQ(loss.item(), 0.0);
  backward(loss);
  for (double g : s.grad()) EXPECT_EQ(g, 0.0);
}

}  // namespace
}  // namespace simcount
