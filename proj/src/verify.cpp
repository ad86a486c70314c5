#include "simcount/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "simcount/counting.hpp"
#include "simcount/grad_check.hpp"
#include "simcount/losses.hpp"
#include "simcount/matching.hpp"
#include "simcount/ops.hpp"
#include "simcount/parameters.hpp"
#include "simcount/representation.hpp"

namespace simcount {

bool VerifyReport::all_passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

namespace {

constexpr double kEps = 1e-6;

Tensor randn(Shape shape, std::mt19937_64& rng, double stddev = 1.0) {
  return normal_tensor(std::move(shape), stddev, rng).set_requires_grad(true);
}

// Entries drawn from +-[0.2, 1.2] so relu and abs-like kinks stay far from
// the finite-difference stencil.
Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> mag(0.2, 1.2);
  std::bernoulli_distribution sign(0.5);
  for (double& v : t.mutable_data()) v = (sign(rng) ? 1 : -1) * mag(rng);
  return t.set_requires_grad(true);
}

class Checker {
 public:
  void grad(std::string name, const CheckedFunction& fn, std::vector<Tensor> inputs,
            GradCheckOptions opts = {}) {
    const GradCheckResult r = grad_check(fn, std::move(inputs), kEps, opts);
    report.checks.push_back({std::move(name), "max_rel_error", r.max_relative_error, kGradTolerance,
                             r.coords_checked, !r.skipped && r.max_relative_error < kGradTolerance});
  }

  void value(std::string name, double error, double tolerance, std::size_t cases) {
    report.checks.push_back({std::move(name), "max_abs_error", error, tolerance, cases, error <= tolerance});
  }

  VerifyReport report;
};

void check_tensor_ops(Checker& c) {
  std::mt19937_64 rng(101);
  c.grad("matmul", [](auto x) { return matmul(x[0], x[1]); }, {randn({3, 4}, rng), randn({4, 5}, rng)});
  c.grad("transpose+reshape", [](auto x) { return reshape(transpose(x[0]), {2, 6}); }, {randn({3, 4}, rng)});
  c.grad("add+sub", [](auto x) { return sub(add(x[0], x[1]), x[0]); }, {randn({2, 3}, rng), randn({2, 3}, rng)});
  c.grad("hadamard", [](auto x) { return hadamard(x[0], x[1]); }, {randn({2, 3}, rng), randn({2, 3}, rng)});
  c.grad("scale+scale_by", [](auto x) { return scale_by(scale(x[0], -1.7), x[1]); },
         {randn({4}, rng), randn({1}, rng)});
  c.grad("sum", [](auto x) { return sum(x[0]); }, {randn({2, 3, 2}, rng)});
  c.grad("relu", [](auto x) { return relu(x[0]); }, {away_from_zero({3, 5}, rng)});
  c.grad("tanh", [](auto x) { return tanh(x[0]); }, {randn({3, 5}, rng)});
  c.grad("softmax", [](auto x) { return softmax(x[0]); }, {randn({6}, rng)});
  c.grad("softmax_rows", [](auto x) { return softmax_rows(x[0]); }, {randn({3, 5}, rng)});
  c.grad("conv2d stride 1",
         [](auto x) { return conv2d(x[0], x[1], x[2], 1, 1); },
         {randn({2, 5, 5}, rng), randn({3, 2, 3, 3}, rng), randn({3}, rng)});
  c.grad("conv2d stride 2",
         [](auto x) { return conv2d(x[0], x[1], x[2], 2, 0); },
         {randn({2, 7, 7}, rng), randn({3, 2, 3, 3}, rng), randn({3}, rng)});
  c.grad("conv2d 1x1 no bias", [](auto x) { return conv2d(x[0], x[1], Tensor(), 1, 0); },
         {randn({3, 4, 4}, rng), randn({2, 3, 1, 1}, rng)});
  c.grad("pad2d", [](auto x) { return pad2d(x[0], 1, 0, 2, 1); }, {randn({2, 3, 3}, rng)});
  c.grad("global_avg_pool", [](auto x) { return global_avg_pool(x[0]); }, {randn({3, 4, 5}, rng)});
  c.grad("bilinear_upsample", [](auto x) { return bilinear_upsample(x[0], 2); }, {randn({2, 3, 4}, rng)});
  c.grad("concat+slice", [](auto x) { return slice(concat(std::vector<Tensor>{x[0], x[1]}), 1, 4); },
         {randn({2, 3}, rng), randn({3, 3}, rng)});
  c.grad("stack+mean_axis0", [](auto x) { return mean_axis0(stack(std::vector<Tensor>{x[0], x[1]})); },
         {randn({2, 3}, rng), randn({2, 3}, rng)});
  c.grad("add_channel_bias", [](auto x) { return add_channel_bias(x[0], x[1]); },
         {randn({3, 2, 2}, rng), randn({3}, rng)});
  c.grad("add_row_bias", [](auto x) { return add_row_bias(x[0], x[1]); }, {randn({4, 3}, rng), randn({3}, rng)});
  c.grad("tile_spatial", [](auto x) { return tile_spatial(x[0], 2, 3); }, {randn({3}, rng)});
}

void check_modules(Checker& c) {
  std::mt19937_64 rng(202);
  const std::size_t d = 6;

  {
    BackboneConfig cfg;
    cfg.d = d;
    cfg.widths = {3, 4, 4};
    cfg.exemplar_size = 8;
    ModelParams p;
    init_representation_params(p, cfg, true, true, 5);
    Tensor image = randn({1, 8, 8}, rng);
    std::vector<Tensor> inputs{image};
    for (const char* n : {"backbone.conv1.weight", "backbone.conv2.bias", "backbone.conv3.weight",
                          "query_proj.weight"}) {
      inputs.push_back(p.get(n));
    }
    c.grad("backbone (query)",
           [&](auto x) { return extract_query_features(x[0], p, cfg).map; }, inputs);
    c.grad("backbone (exemplar)", [&](auto x) { return extract_exemplar_feature(x[0], p, cfg); },
           {image, p.get("backbone.conv1.weight"), p.get("exemplar_proj.weight"), p.get("exemplar_proj.bias")});
    c.grad("scale embedding", [](auto x) { return apply_scale_embedding(x[0], 3, x[1]); },
           {randn({d}, rng), p.get("scale_embedding")});

    p.get("self_sim.gamma").mutable_data()[0] = 0.7;
    const SelfSimilarityParams ss = SelfSimilarityParams::from(p);
    Tensor field = randn({d, 2, 3}, rng);
    Tensor z1 = randn({d}, rng), z2 = randn({d}, rng);
    c.grad("self-similarity attention",
           [&](auto x) {
             std::vector<Tensor> zs{x[1], x[2]};
             SelfSimilarityOutput out = self_similarity({x[0], 4}, zs, ss);
             return concat(std::vector<Tensor>{transpose(reshape(out.field.map, {d, 6})), stack(out.exemplars)});
           },
           {field, z1, z2, ss.wq, ss.bq, ss.wk, ss.wv, ss.bv, ss.gamma});
    // The key bias shifts every score row by a constant, so its gradient is
    // exactly zero and a relative error is meaningless; check it absolutely.
    {
      Tensor bk = ss.bk;
      bk.zero_grad();
      std::vector<Tensor> zs{z1, z2};
      SelfSimilarityOutput out = self_similarity({field, 4}, zs, ss);
      backward(sum(hadamard(out.field.map, out.field.map)));
      double worst = 0;
      for (double g : ss.bk.grad()) worst = std::max(worst, std::abs(g));
      c.value("self-similarity key bias (zero grad)", worst, 1e-10, ss.bk.size());
    }
  }

  {
    ModelParams p;
    init_metric_params(p, d, true, 9);
    for (const char* n : {"metric.b_x", "metric.b_z", "metric.attn.c1", "metric.attn.c2"}) {
      for (double& v : p.get(n).mutable_data()) v = std::normal_distribution<double>(0, 0.3)(rng);
    }
    const MetricParams m = MetricParams::from(p);
    Tensor field = randn({d, 3, 3}, rng);
    Tensor z = randn({d}, rng);
    c.grad("bilinear metric", [&](auto x) { return bilinear_similarity({x[0], 4}, x[1], m); },
           {field, z, m.P, m.Q, m.b_x, m.b_z});
    c.grad("channel attention", [&](auto x) { return channel_attention(x[0], m); },
           {z, m.Q, m.b_z, m.w1, m.c1, m.w2, m.c2});
    c.grad("dynamic metric", [&](auto x) { return dynamic_similarity({x[0], 4}, x[1], m); },
           {field, z, m.P, m.Q, m.b_x, m.b_z, m.w1, m.c1, m.w2, m.c2});
    Tensor z2 = randn({d}, rng);
    c.grad("exemplar matching (n=2)",
           [&](auto x) {
             std::vector<Tensor> zs{x[1], x[2]};
             return match_exemplars({x[0], 4}, zs, m, true).map;
           },
           {field, z, z2, m.P, m.w2});
  }

  {
    ModelParams p;
    init_counter_params(p, 3, 4, CounterConfig{4, 2}, 13);
    Tensor fused = randn({3, 3, 3}, rng);
    std::vector<Tensor> inputs{fused};
    for (const auto& e : p.entries()) inputs.push_back(e.tensor);
    c.grad("counter", [&](auto x) { return counter_forward(x[0], p, 4).map; }, inputs,
           GradCheckOptions{24, 17});
    c.grad("fusion (xzs)",
           [](auto x) { return fuse({x[0], 4}, x[1], x[2], FusionMode::kXZS); },
           {randn({2, 2, 3}, rng), randn({2}, rng), randn({2, 3}, rng)});
  }

  {
    Tensor pred = randn({5, 6}, rng), gt = randn({5, 6}, rng);
    c.grad("counting loss", [](auto x) { return counting_loss(x[0], x[1]); }, {pred, gt});
    const std::vector<Point> dots{{1, 1}, {9, 2}, {10, 3}, {5, 13}};
    const SimilarityLabels labels = assign_labels(dots, 4, 4, 4);
    c.grad("similarity loss", [&](auto x) { return similarity_loss(x[0], labels); }, {randn({4, 4}, rng, 2.0)});
    c.grad("similarity loss (n=3 mean)", [&](auto x) { return similarity_loss(x[0], labels, nullptr); },
           {randn({3, 4, 4}, rng, 2.0)});
    c.grad("total loss",
           [&](auto x) { return total_loss(counting_loss(x[0], x[1]), similarity_loss(x[2], labels), {0.37}); },
           {pred, gt, randn({4, 4}, rng)});
  }
}

void check_identities(Checker& c) {
  std::mt19937_64 rng(303);
  {
    // P = Q = I, b = 0 reduces the bilinear metric to the inner product.
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t d = 1 + trial % 8, h = 1 + trial % 3, w = 1 + trial % 4;
      MetricParams m;
      m.P = Tensor({d, d});
      m.Q = Tensor({d, d});
      for (std::size_t i = 0; i < d; ++i) {
        m.P.mutable_data()[i * d + i] = 1;
        m.Q.mutable_data()[i * d + i] = 1;
      }
      m.b_x = Tensor({d});
      m.b_z = Tensor({d});
      Tensor x = normal_tensor({d, h, w}, 1.0, rng), z = normal_tensor({d}, 1.0, rng);
      Tensor s = bilinear_similarity({x, 4}, z, m);
      for (std::size_t p = 0; p < h * w; ++p) {
        double dot = 0;
        for (std::size_t k = 0; k < d; ++k) dot += x.at(k * h * w + p) * z.at(k);
        worst = std::max(worst, std::abs(dot - s.at(p)));
      }
    }
    c.value("identity reduction (P=Q=I)", worst, 1e-12, 50);
  }
  {
    double worst = 0;
    std::uniform_int_distribution<int> size(2, 10), mark(0, 2);
    std::normal_distribution<double> score(0.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = size(rng);
      std::vector<double> s(static_cast<std::size_t>(n));
      std::vector<Mark> marks(static_cast<std::size_t>(n));
      for (auto& v : s) v = score(rng);
      for (auto& mk : marks) mk = static_cast<Mark>(mark(rng));
      marks[0] = Mark::kPositive;
      marks[1] = Mark::kNegative;
      double pos = 0, all = 0;
      for (int i = 0; i < n; ++i) {
        if (marks[static_cast<std::size_t>(i)] == Mark::kIgnored) continue;
        all += std::exp(s[static_cast<std::size_t>(i)]);
        if (marks[static_cast<std::size_t>(i)] == Mark::kPositive) pos += std::exp(s[static_cast<std::size_t>(i)]);
      }
      const double direct = -std::log(pos / all);
      worst = std::max(worst, std::abs(direct - log_ratio_loss(Tensor({s.size()}, s), marks).item()));
    }
    c.value("similarity loss vs closed form", worst, 1e-10, 100);
    const std::vector<Mark> pair{Mark::kPositive, Mark::kNegative};
    c.value("similarity loss symmetric pair = ln 2",
            std::abs(log_ratio_loss(Tensor({2}, {0.3, 0.3}), pair).item() - std::log(2.0)), 1e-12, 1);
  }
  {
    const double err = std::abs(static_cast<double>(scale_level(32, 32, 64, 64, 20)) - 10) +
                       std::abs(static_cast<double>(scale_level(64, 64, 64, 64, 20)) - 19) +
                       std::abs(static_cast<double>(scale_level(1, 1, 100, 100, 20)) - 0);
    c.value("scale level table", err, 0.0, 3);
  }
}

}  // namespace

VerifyReport run_verify() {
  const auto start = std::chrono::steady_clock::now();
  Checker c;
  check_tensor_ops(c);
  check_modules(c);
  check_identities(c);
  c.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c.report;
}

std::string format_verify_report(const VerifyReport& report) {
  std::string out;
  char line[256];
  std::size_t failed = 0;
  for (const auto& c : report.checks) {
    std::snprintf(line, sizeof line, "%-4s %-36s %s=%.3e (tol %.0e, %zu coords)\n", c.passed ? "ok" : "FAIL",
                  c.name.c_str(), c.metric.c_str(), c.value, c.tolerance, c.coords);
    out += line;
    if (!c.passed) ++failed;
  }
  std::snprintf(line, sizeof line, "%zu checks, %zu failed, %.2fs\n", report.checks.size(), failed, report.seconds);
  out += line;
  return out;
}

}  // namespace simcount
