#include "simcount/parameters.hpp"

#include <algorithm>

#include "simcount/errors.hpp"

namespace simcount {

Tensor& ModelParams::add(std::string name, Tensor value, bool decay_enabled) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(value), std::move(name), decay_enabled});
  return entries_.back().tensor;
}

bool ModelParams::contains(std::string_view name) const { return index_.contains(std::string(name)); }

const Tensor& ModelParams::get(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].tensor;
}

Tensor& ModelParams::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ModelParams&>(*this).get(name));
}

Tensor ModelParams::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? Tensor{} : entries_[it->second].tensor;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.tensor.size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto& p : entries_) {
    auto g = p.tensor.mutable_grad();
    std::fill(g.begin(), g.end(), 0.0);
  }
}

ModelParams ModelParams::clone() const {
  ModelParams copy;
  for (const auto& p : entries_) copy.add(p.name, p.tensor.detach(), p.decay_enabled);
  return copy;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 parameter_rng(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return std::mt19937_64(mix_seed(seed, h));
}

Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.mutable_data()) v = dist(rng);
  return t;
}

Tensor uniform_tensor(Shape shape, double half_width, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-half_width, half_width);
  for (double& v : t.mutable_data()) v = dist(rng);
  return t;
}

}  // namespace simcount
