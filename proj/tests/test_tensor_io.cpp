#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lamp/errors.hpp"
#include "lamp/rng.hpp"
#include "lamp/tensor_io.hpp"

using namespace lamp;

TEST(TensorIo, ExactByteLayout) {
  std::ostringstream os;
  write_tensor(os, Tensor{{1, 2}, {1.0, -2.0}});
  const std::string b = os.str();
  ASSERT_EQ(b.size(), 7u + 4 + 8 + 16);
  EXPECT_EQ(std::memcmp(b.data(), "LTNSR1\0", 7), 0);
  const unsigned char rank[4] = {2, 0, 0, 0};
  EXPECT_EQ(std::memcmp(b.data() + 7, rank, 4), 0);
  const unsigned char dims[8] = {1, 0, 0, 0, 2, 0, 0, 0};
  EXPECT_EQ(std::memcmp(b.data() + 11, dims, 8), 0);
  // 1.0 = 0x3FF0000000000000, -2.0 = 0xC000000000000000 (little endian).
  const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  const unsigned char m2[8] = {0, 0, 0, 0, 0, 0, 0, 0xC0};
  EXPECT_EQ(std::memcmp(b.data() + 19, one, 8), 0);
  EXPECT_EQ(std::memcmp(b.data() + 27, m2, 8), 0);
}

TEST(TensorIo, RoundTripIsBitExact) {
  const Image x = standard_normal(Shape{3, 5, 7}, 99);
  const auto path = std::filesystem::temp_directory_path() / "lamp_tensor_io_rt.ltnsr";
  write_image(path, x);
  const Image y = read_image(path);
  EXPECT_EQ(x.shape(), y.shape());
  EXPECT_TRUE(x == y);
  std::filesystem::remove(path);
}

TEST(TensorIo, RejectsCorruptInput) {
  std::istringstream bad_magic(std::string("LTNSR2\0\0\0\0\0", 11));
  EXPECT_THROW(read_tensor(bad_magic), std::runtime_error);

  std::ostringstream os;
  write_tensor(os, Tensor{{4}, {1, 2, 3, 4}});
  std::string truncated = os.str();
  truncated.resize(truncated.size() - 3);
  std::istringstream is(truncated);
  EXPECT_THROW(read_tensor(is), std::runtime_error);
}

TEST(TensorIo, LowerRankReadsAsSingleChannel) {
  const auto path = std::filesystem::temp_directory_path() / "lamp_tensor_io_r2.ltnsr";
  write_tensor(path, Tensor{{2, 3}, {1, 2, 3, 4, 5, 6}});
  const Image x = read_image(path);
  EXPECT_EQ(x.shape(), (Shape{1, 2, 3}));
  EXPECT_EQ(x.at(0, 1, 2), 6.0);
  std::filesystem::remove(path);
}

TEST(TensorIo, PgmIsClamped) {
  Image x(Shape{1, 1, 3});
  x[0] = -0.5;
  x[1] = 0.5;
  x[2] = 2.0;
  const auto path = std::filesystem::temp_directory_path() / "lamp_tensor_io.pgm";
  write_pnm(path, x);
  std::ifstream in(path, std::ios::binary);
  const std::string s((std::istreambuf_iterator<char>(in)), {});
  ASSERT_GE(s.size(), 3u);
  EXPECT_EQ(s.substr(0, 2), "P5");
  EXPECT_EQ(static_cast<unsigned char>(s[s.size() - 3]), 0);
  EXPECT_EQ(static_cast<unsigned char>(s[s.size() - 1]), 255);
  std::filesystem::remove(path);
}
