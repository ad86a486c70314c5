#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "simcount/tensor.hpp"

namespace simcount {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coords_checked = 0;
  // True when no input requires grad, so there is nothing to compare.
  bool skipped = false;
};

struct GradCheckOptions {
  // Upper bound on coordinates probed per input (0 = all), sampled with `seed`.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 17;
};

using CheckedFunction = std::function<Tensor(std::span<const Tensor>)>;

// Central-difference gradient check. Non-scalar outputs are reduced to a
// scalar with fixed random weights before differentiation. Relative error
// per coordinate is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const CheckedFunction& fn, std::vector<Tensor> inputs, double epsilon,
                           const GradCheckOptions& options = {});

// Convenience for a single-input operation.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& input,
                           double epsilon, const GradCheckOptions& options = {});

}  // namespace simcount
