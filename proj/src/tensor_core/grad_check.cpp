#include "simcount/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "simcount/errors.hpp"
#include "simcount/ops.hpp"

namespace simcount {

namespace {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

double weighted_sum(const Tensor& out, const Tensor& weights) {
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) acc += out.at(i) * weights.at(i);
  return acc;
}

}  // namespace

GradCheckResult grad_check(const CheckedFunction& fn, std::vector<Tensor> inputs, double epsilon,
                           const GradCheckOptions& options) {
  if (!(epsilon > 0.0)) throw ContractError("grad_check: epsilon must be positive");
  GradCheckResult result;
  if (std::none_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); })) {
    result.skipped = true;
    return result;
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Tensor out = fn(inputs);
  Tensor weights(out.shape());
  for (double& w : weights.mutable_data()) w = out.size() == 1 ? 1.0 : normal(rng);

  for (Tensor& t : inputs) {
    if (t.requires_grad()) t.zero_grad();
  }
  backward(sum(hadamard(out, weights)));

  for (Tensor& t : inputs) {
    if (!t.requires_grad()) continue;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    std::vector<std::size_t> coords(t.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_input != 0 && coords.size() > options.max_coords_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_input);
    }
    auto values = t.mutable_data();
    for (std::size_t c : coords) {
      const double original = values[c];
      double plus = 0.0, minus = 0.0;
      {
        NoGradGuard no_grad;
        values[c] = original + epsilon;
        plus = weighted_sum(fn(inputs), weights);
        values[c] = original - epsilon;
        minus = weighted_sum(fn(inputs), weights);
      }
      values[c] = original;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic[c], numeric));
      ++result.coords_checked;
    }
  }
  return result;
}

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& input, double epsilon,
                           const GradCheckOptions& options) {
  return grad_check([&fn](std::span<const Tensor> xs) { return fn(xs[0]); }, std::vector<Tensor>{input}, epsilon,
                    options);
}

}  // namespace simcount
