#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "simcount/model.hpp"
#include "simcount/synthetic_tasks.hpp"
#include "simcount/trainer.hpp"

namespace simcount {

// Flat key=value configuration. Lines starting with '#' or ';' and blank
// lines are ignored; "[section]" headers are not supported. Every key has a
// default, and unknown keys or malformed values throw ConfigError.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_ini(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  void set(std::string_view key, std::string_view value);
  // Parses "key=value".
  void set_assignment(std::string_view assignment);
  const std::string& get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  // Keys in sorted order, one per line.
  std::string to_ini() const;

  ModelConfig model() const;
  TrainConfig train() const;
  SplitConfig splits() const;
  std::uint64_t seed() const;

  // Presets for cmd_train --variant.
  void apply_variant(std::string_view variant);
  // Uses the first n categories: all but the last two train, then one val
  // and one test category.
  void set_category_count(std::size_t n);

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace simcount
