#include "simcount/optimizer.hpp"

#include <cmath>

#include "simcount/errors.hpp"

namespace simcount {

OptimState OptimState::for_params(const ModelParams& params, const OptimConfig& config) {
  OptimState state;
  state.config = config;
  for (const auto& p : params.entries()) {
    state.m.emplace_back(p.tensor.size(), 0.0);
    state.v.emplace_back(p.tensor.size(), 0.0);
  }
  return state;
}

void optim_step(ModelParams& params, OptimState& state) {
  auto& entries = params.entries();
  if (entries.size() != state.m.size()) {
    throw ContractError("optimizer state tracks " + std::to_string(state.m.size()) + " parameters, model has " +
                        std::to_string(entries.size()));
  }
  for (const auto& p : entries) {
    if (!p.tensor.has_grad()) throw ContractError("parameter '" + p.name + "' has no gradient");
  }
  const OptimConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Parameter& p = entries[k];
    if (state.m[k].size() != p.tensor.size()) {
      throw ContractError("optimizer moments for '" + p.name + "' have the wrong size");
    }
    const double decay = (p.decay_enabled || c.decay_all) ? c.weight_decay : 0.0;
    auto values = p.tensor.mutable_data();
    const auto grad = p.tensor.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= c.lr * (m_hat / (std::sqrt(v_hat) + c.eps)) + c.lr * decay * values[i];
    }
  }
}

}  // namespace simcount
