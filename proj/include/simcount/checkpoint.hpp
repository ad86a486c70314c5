#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "simcount/parameters.hpp"

// Binary container, all integers little-endian:
//   "SIMC"  u32 version  u32 record_count
//   per record: u32 name_len, name bytes, u32 rank, u64 dims[rank],
//               f64 values[prod(dims)]
namespace simcount {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointRecord {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

std::string encode_checkpoint(const ModelParams& params);
std::vector<CheckpointRecord> decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
std::vector<CheckpointRecord> load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into an initialized model; names and shapes must
// match exactly.
void restore_params(ModelParams& params, const std::vector<CheckpointRecord>& records);

}  // namespace simcount
