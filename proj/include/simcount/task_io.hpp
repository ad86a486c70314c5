#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "simcount/synthetic_tasks.hpp"

// On-disk task schema:
//   {"category_id": int,
//    "image": {"h": int, "w": int, "c": int, "data": base64(little-endian f64, c*h*w, row-major [c,h,w])},
//    "dots": [[x, y], ...],
//    "exemplar_boxes": [[x0, y0, x1, y1], ...]}   (boxes are half-open)
// Density maps use the same {"h","w","c","data"} layout, or CSV with one
// line per image row.
namespace simcount {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_reals(std::span<const double> values);
std::vector<double> decode_reals(std::string_view base64);

nlohmann::json tensor_to_json(const Tensor& image_or_map);
Tensor tensor_from_json(const nlohmann::json& j);

nlohmann::json task_to_json(const CountingTask& task);
CountingTask task_from_json(const nlohmann::json& j);

void write_task(const std::filesystem::path& path, const CountingTask& task);
CountingTask read_task(const std::filesystem::path& path);
// All *.json files of a directory in lexicographic filename order.
std::vector<CountingTask> read_task_dir(const std::filesystem::path& dir);
std::string task_file_name(std::size_t index);

void write_map_csv(const std::filesystem::path& path, const Tensor& map);
Tensor read_map_csv(const std::filesystem::path& path);

// Writes `text` to `path`, creating parent directories; throws IoError.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace simcount
