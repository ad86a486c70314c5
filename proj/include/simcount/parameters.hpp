#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "simcount/tensor.hpp"

namespace simcount {

struct Parameter {
  Tensor tensor;  // leaf with requires_grad set
  std::string name;
  bool decay_enabled = true;
};

// Named collection of all learnable state of a model. Insertion order is
// preserved and defines checkpoint and optimizer ordering.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(const ModelParams&) = delete;
  ModelParams& operator=(const ModelParams&) = delete;
  ModelParams(ModelParams&&) = default;
  ModelParams& operator=(ModelParams&&) = default;

  Tensor& add(std::string name, Tensor value, bool decay_enabled);
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);
  // Undefined tensor when absent (optional branches).
  Tensor find(std::string_view name) const;

  std::vector<Parameter>& entries() { return entries_; }
  const std::vector<Parameter>& entries() const { return entries_; }
  std::size_t parameter_count() const;

  void zero_grad();
  // Independent copy: fresh leaves holding the same values.
  ModelParams clone() const;

 private:
  std::vector<Parameter> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Per-parameter RNG stream derived from (seed, name), so a parameter's
// initial value does not depend on which other parameters exist.
std::mt19937_64 parameter_rng(std::uint64_t seed, std::string_view name);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Common initializers. Shapes must be fully specified.
Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng);
Tensor uniform_tensor(Shape shape, double half_width, std::mt19937_64& rng);

}  // namespace simcount
