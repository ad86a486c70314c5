#include "simcount/checkpoint.hpp"

#include <algorithm>
#include <bit>

#include "simcount/errors.hpp"
#include "simcount/task_io.hpp"

namespace simcount {

namespace {

template <typename T>
void put(std::string& out, T value) {
  const auto bits = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b) out += static_cast<char>((bits >> (8 * b)) & 0xff);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(T));
    Bits bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
      bits |= static_cast<Bits>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ModelParams& params) {
  std::string out = "SIMC";
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.entries().size()));
  for (const auto& p : params.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) put<std::uint64_t>(out, d);
    for (double v : p.tensor.data()) put<double>(out, v);
  }
  return out;
}

std::vector<CheckpointRecord> decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4) != "SIMC") throw IoError("not a checkpoint (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  std::vector<CheckpointRecord> records;
  for (std::uint32_t r = 0; r < count; ++r) {
    CheckpointRecord rec;
    rec.name = std::string(in.take(in.get<std::uint32_t>()));
    const auto rank = in.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < rank; ++k) rec.shape.push_back(static_cast<std::size_t>(in.get<std::uint64_t>()));
    rec.values.resize(numel(rec.shape));
    for (double& v : rec.values) v = in.get<double>();
    records.push_back(std::move(rec));
  }
  if (!in.done()) throw IoError("trailing bytes after checkpoint records");
  return records;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  write_text(path, encode_checkpoint(params));
}

std::vector<CheckpointRecord> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_text(path));
}

void restore_params(ModelParams& params, const std::vector<CheckpointRecord>& records) {
  if (records.size() != params.entries().size()) {
    throw IoError("checkpoint has " + std::to_string(records.size()) + " parameters, model expects " +
                  std::to_string(params.entries().size()));
  }
  for (const auto& rec : records) {
    if (!params.contains(rec.name)) throw IoError("checkpoint parameter '" + rec.name + "' not in model");
    Tensor& t = params.get(rec.name);
    if (t.shape() != rec.shape) {
      throw IoError("checkpoint parameter '" + rec.name + "' has shape " + to_string(rec.shape) + ", model expects " +
                    to_string(t.shape()));
    }
    std::copy(rec.values.begin(), rec.values.end(), t.mutable_data().begin());
  }
}

}  // namespace simcount
