#include <gtest/gtest.h>

#include <filesystem>

#include "simcount/checkpoint.hpp"
#include "simcount/errors.hpp"
#include "simcount/model.hpp"

namespace simcount {
namespace {

TEST(Checkpoint, RoundTripRestoresBitsExactly) {
  const ModelConfig cfg = ModelConfig::bmnet_plus();
  const ModelParams src = init_model(cfg, 3);
  ModelParams dst = init_model(cfg, 4);
  restore_params(dst, decode_checkpoint(encode_checkpoint(src)));
  ASSERT_EQ(dst.entries().size(), src.entries().size());
  for (std::size_t k = 0; k < src.entries().size(); ++k) {
    const auto a = src.entries()[k].tensor.data(), b = dst.entries()[k].tensor.data();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << src.entries()[k].name;
  }
}

TEST(Checkpoint, HeaderLayout) {
  ModelParams p;
  p.add("w", Tensor({2}, std::vector<double>{1.0, -2.0}), true);
  const std::string bytes = encode_checkpoint(p);
  // magic + version + count + (len + name + rank + 1 dim + 2 values)
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 1 + 4 + 8 + 16);
  EXPECT_EQ(bytes.substr(0, 4), "SIMC");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), kCheckpointVersion);
  const auto records = decode_checkpoint(bytes);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].name, "w");
  EXPECT_EQ(records[0].shape, (Shape{2}));
  EXPECT_EQ(records[0].values, (std::vector<double>{1.0, -2.0}));
}

TEST(Checkpoint, CorruptInputRejected) {
  ModelParams p;
  p.add("w", Tensor({3}, 1.0), true);
  const std::string good = encode_checkpoint(p);
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), IoError);
  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_THROW(decode_checkpoint(bad_version), IoError);
  EXPECT_THROW(decode_checkpoint(good.substr(0, good.size() - 1)), IoError);
  EXPECT_THROW(decode_checkpoint(good + "x"), IoError);
}

TEST(Checkpoint, MismatchedModelRejected) {
  const ModelParams plus = init_model(ModelConfig::bmnet_plus(), 1);
  ModelParams plain = init_model(ModelConfig::bmnet(), 1);
  EXPECT_THROW(restore_params(plain, decode_checkpoint(encode_checkpoint(plus))), IoError);
  ModelParams p;
  p.add("w", Tensor({3}), true);
  ModelParams q;
  q.add("w", Tensor({4}), true);
  EXPECT_THROW(restore_params(q, decode_checkpoint(encode_checkpoint(p))), IoError);
  ModelParams r;
  r.add("v", Tensor({3}), true);
  EXPECT_THROW(restore_params(r, decode_checkpoint(encode_checkpoint(p))), IoError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "simcount_ckpt_test" / "model.simc";
  std::filesystem::remove_all(path.parent_path());
  const ModelParams src = init_model(ModelConfig::bmnet(), 8);
  save_checkpoint(path, src);
  ModelParams dst = init_model(ModelConfig::bmnet(), 9);
  restore_params(dst, load_checkpoint(path));
  EXPECT_EQ(encode_checkpoint(dst), encode_checkpoint(src));
  EXPECT_THROW(load_checkpoint(path.parent_path() / "missing.simc"), IoError);
}

}  // namespace
}  // namespace simcount
