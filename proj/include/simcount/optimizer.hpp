#pragma once

#include <cstdint>
#include <vector>

#include "simcount/parameters.hpp"

namespace simcount {

struct OptimConfig {
  double lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  // When set, decay applies to every parameter regardless of its flag.
  bool decay_all = false;
};

// AdamW moments for one ModelParams collection, in entry order.
struct OptimState {
  OptimConfig config{};
  std::vector<std::vector<double>> m, v;
  std::uint64_t step = 0;

  static OptimState for_params(const ModelParams& params, const OptimConfig& config);
};

// p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p  (decoupled decay)
void optim_step(ModelParams& params, OptimState& state);

}  // namespace simcount
