#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "elicit/encoder.hpp"
#include "elicit/error.hpp"
#include "test_support.hpp"

namespace elicit {
namespace {

std::string serialized(const EncoderModel& m) {
  std::ostringstream out;
  write_model(out, m);
  return out.str();
}

EncoderModel parse(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_model(in);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto m = EncoderModel::initialize(300, 7, 42);
  const auto bytes = serialized(m);
  EXPECT_EQ(bytes.size(), 32u + 300u * 7u * 8u);
  EXPECT_EQ(bytes.substr(0, 8), "ELICITEM");
  const auto back = parse(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(std::memcmp(back.weights().data(), m.weights().data(), m.weights().size_bytes()), 0);
  EXPECT_EQ(serialized(back), bytes);
}

TEST(Checkpoint, HeaderIsLittleEndian) {
  const auto bytes = serialized(EncoderModel::initialize(258, 3, 0x0102030405060708ULL));
  const auto u = [&](std::size_t i) { return static_cast<unsigned char>(bytes[i]); };
  EXPECT_EQ(u(8), 1u);   // version
  EXPECT_EQ(u(12), 2u);  // 258 = 0x0102
  EXPECT_EQ(u(13), 1u);
  EXPECT_EQ(u(16), 3u);
  EXPECT_EQ(u(24), 0x08u);
  EXPECT_EQ(u(31), 0x01u);
}

TEST(Checkpoint, FileRoundTrip) {
  ::elicit::testing::TempDir dir;
  const auto m = EncoderModel::initialize(64, 4, 1);
  save_model(m, dir / "m.ckpt");
  EXPECT_EQ(load_model(dir / "m.ckpt"), m);
  EXPECT_THROW(load_model(dir / "missing.ckpt"), ValidationError);
}

TEST(Checkpoint, TruncatedOrCorruptFilesAreRejected) {
  const auto bytes = serialized(EncoderModel::initialize(16, 4, 1));
  EXPECT_THROW(parse(bytes.substr(0, 20)), ValidationError);
  EXPECT_THROW(parse(bytes.substr(0, bytes.size() - 1)), ValidationError);
  EXPECT_THROW(parse(bytes + "x"), ValidationError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse(bad_magic), ValidationError);
  auto nan = bytes;
  for (std::size_t i = 32; i < 40; ++i) nan[i] = static_cast<char>(0xFF);
  EXPECT_THROW(parse(nan), ValidationError);
}

TEST(Checkpoint, FutureVersionIsNamedInTheError) {
  auto bytes = serialized(EncoderModel::initialize(16, 4, 1));
  bytes[8] = 9;
  try {
    parse(bytes);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("version 9"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace elicit
