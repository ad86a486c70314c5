#include "simcount/task_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "simcount/errors.hpp"

namespace simcount {

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw IoError("base64: length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      int d = 0;
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw IoError("base64: misplaced padding");
        ++pad;
      } else {
        if (pad > 0) throw IoError("base64: data after padding");
        d = decode_char(c);
        if (d < 0) throw IoError("base64: invalid character");
      }
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string encode_reals(std::span<const double> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_reals(std::string_view base64) {
  const auto bytes = base64_decode(base64);
  if (bytes.size() % 8 != 0) throw IoError("real payload is not a whole number of 64-bit values");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

nlohmann::json tensor_to_json(const Tensor& t) {
  std::size_t c = 1, h = 0, w = 0;
  if (t.rank() == 3) {
    c = t.dim(0), h = t.dim(1), w = t.dim(2);
  } else if (t.rank() == 2) {
    h = t.dim(0), w = t.dim(1);
  } else {
    throw DimensionError("tensor_to_json: expected [c,h,w] or [h,w], got " + to_string(t.shape()));
  }
  return {{"h", h}, {"w", w}, {"c", c}, {"data", encode_reals(t.data())}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
  const auto h = j.at("h").get<std::size_t>(), w = j.at("w").get<std::size_t>(), c = j.at("c").get<std::size_t>();
  auto data = decode_reals(j.at("data").get<std::string>());
  if (data.size() != c * h * w) throw IoError("image payload has " + std::to_string(data.size()) + " values, expected " +
                                              std::to_string(c * h * w));
  return Tensor({c, h, w}, std::move(data));
}

nlohmann::json task_to_json(const CountingTask& task) {
  nlohmann::json dots = nlohmann::json::array();
  for (const Point& p : task.dots) dots.push_back({p.x, p.y});
  nlohmann::json boxes = nlohmann::json::array();
  for (const Box& b : task.exemplar_boxes) boxes.push_back({b.x0, b.y0, b.x1, b.y1});
  return {{"category_id", task.category_id},
          {"image", tensor_to_json(task.image)},
          {"dots", dots},
          {"exemplar_boxes", boxes}};
}

CountingTask task_from_json(const nlohmann::json& j) {
  try {
    CountingTask task;
    task.category_id = j.at("category_id").get<int>();
    task.image = tensor_from_json(j.at("image"));
    for (const auto& p : j.at("dots")) task.dots.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    for (const auto& b : j.at("exemplar_boxes")) {
      task.exemplar_boxes.push_back({b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()});
    }
    return task;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed task JSON: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_task(const std::filesystem::path& path, const CountingTask& task) {
  write_text(path, task_to_json(task).dump() + "\n");
}

CountingTask read_task(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return task_from_json(j);
}

std::vector<CountingTask> read_task_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<CountingTask> tasks;
  tasks.reserve(files.size());
  for (const auto& f : files) tasks.push_back(read_task(f));
  return tasks;
}

std::string task_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "task_%05zu.json", index);
  return buf;
}

void write_map_csv(const std::filesystem::path& path, const Tensor& map) {
  if (map.rank() != 2) throw DimensionError("write_map_csv: expected [h,w], got " + to_string(map.shape()));
  std::string text;
  const std::size_t h = map.dim(0), w = map.dim(1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (x) text += ',';
      text += format_real(map.at(y * w + x));
    }
    text += '\n';
  }
  write_text(path, text);
}

Tensor read_map_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t n = 0;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      values.push_back(std::stod(cell));
      ++n;
    }
    if (rows == 0) cols = n;
    if (n != cols) throw IoError(path.string() + ": ragged CSV row");
    ++rows;
  }
  if (rows == 0) throw IoError(path.string() + ": empty CSV");
  return Tensor({rows, cols}, std::move(values));
}

}  // namespace simcount
