#include <gtest/gtest.h>

#include <bit>
#include <filesystem>
#include <limits>

#include "simcount/errors.hpp"
#include "simcount/task_io.hpp"

namespace simcount {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / ("simcount_task_io_" + std::string(name));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Base64, KnownVectors) {
  const std::string text = "foobar";
  for (std::size_t n = 0; n <= text.size(); ++n) {
    const std::vector<std::uint8_t> bytes(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(n));
    const std::string enc = base64_encode(bytes);
    static const char* expected[] = {"", "Zg==", "Zm8=", "Zm9v", "Zm9vYg==", "Zm9vYmE=", "Zm9vYmFy"};
    EXPECT_EQ(enc, expected[n]);
    EXPECT_EQ(base64_decode(enc), bytes);
  }
}

TEST(Base64, RejectsMalformed) {
  EXPECT_THROW(base64_decode("Zm9"), IoError);
  EXPECT_THROW(base64_decode("Z=9v"), IoError);
  EXPECT_THROW(base64_decode("Zm9*"), IoError);
}

TEST(Reals, BitExactRoundTrip) {
  const std::vector<double> v{0.0, -0.0, 1.0 / 3.0, -1e-300, std::numeric_limits<double>::max(),
                              std::numeric_limits<double>::denorm_min()};
  const auto back = decode_reals(encode_reals(v));
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(v[i]));
  // Little-endian: 1.0 is 00 00 00 00 00 00 f0 3f.
  EXPECT_EQ(encode_reals(std::vector<double>{1.0}), "AAAAAAAA8D8=");
  EXPECT_THROW(decode_reals("AAAA"), IoError);
}

TEST(TaskJson, RoundTrip) {
  const CountingTask t = generate_task(default_categories()[4], {3, 12}, {32, 48}, 9);
  const CountingTask back = task_from_json(task_to_json(t));
  EXPECT_EQ(back.category_id, t.category_id);
  EXPECT_EQ(back.dots, t.dots);
  EXPECT_EQ(back.exemplar_boxes, t.exemplar_boxes);
  EXPECT_EQ(back.image.shape(), (Shape{1, 32, 48}));
  EXPECT_TRUE(std::equal(t.image.data().begin(), t.image.data().end(), back.image.data().begin()));
  const auto j = task_to_json(t);
  EXPECT_EQ(j.at("image").at("h"), 32);
  EXPECT_EQ(j.at("image").at("w"), 48);
  EXPECT_EQ(j.at("image").at("c"), 1);
}

TEST(TaskJson, MalformedIsIoError) {
  auto j = task_to_json(generate_task(default_categories()[0], {3, 5}, {32, 32}, 1));
  auto missing = j;
  missing.erase("dots");
  EXPECT_THROW(task_from_json(missing), IoError);
  auto short_payload = j;
  short_payload["image"]["h"] = 31;
  EXPECT_THROW(task_from_json(short_payload), IoError);
}

TEST(TaskFiles, DirectoryReadIsOrdered) {
  const fs::path dir = scratch_dir("dir");
  std::vector<CountingTask> tasks;
  for (std::size_t i = 0; i < 3; ++i) {
    tasks.push_back(generate_task(default_categories()[i], {3, 6}, {32, 32}, i));
    write_task(dir / task_file_name(2 - i), tasks.back());
  }
  write_text(dir / "notes.txt", "ignored");
  const auto loaded = read_task_dir(dir);
  ASSERT_EQ(loaded.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(loaded[i].category_id, tasks[2 - i].category_id);
  EXPECT_EQ(task_file_name(7), "task_00007.json");
  EXPECT_THROW(read_task_dir(dir / "absent"), IoError);
  EXPECT_THROW(read_task(dir / "notes.txt"), IoError);
}

TEST(MapCsv, RoundTripIsExact) {
  const fs::path dir = scratch_dir("csv");
  Tensor m({2, 3}, std::vector<double>{0.1, 1.0 / 3.0, -2.5e-7, 0, 1e300, 7});
  write_map_csv(dir / "m.csv", m);
  const Tensor back = read_map_csv(dir / "m.csv");
  EXPECT_EQ(back.shape(), m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(back.at(i), m.at(i));
  EXPECT_THROW(write_map_csv(dir / "bad.csv", Tensor({1, 2, 3})), DimensionError);
  write_text(dir / "ragged.csv", "1,2\n3\n");
  EXPECT_THROW(read_map_csv(dir / "ragged.csv"), IoError);
}

}  // namespace
}  // namespace simcount
