#include <gtest/gtest.h>

#include "onealign/binio.hpp"
#include "onealign/error.hpp"

using namespace onealign;

TEST(Binio, LittleEndianLayout) {
  binio::Writer w;
  w.u32(0x01020304u);
  w.u64(0x0807060504030201ull);
  w.f32(1.0f);
  const std::string& d = w.data();
  ASSERT_EQ(d.size(), 16u);
  EXPECT_EQ(static_cast<unsigned char>(d[0]), 0x04);
  EXPECT_EQ(static_cast<unsigned char>(d[3]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(d[4]), 0x01);
  EXPECT_EQ(static_cast<unsigned char>(d[11]), 0x08);
  EXPECT_EQ(static_cast<unsigned char>(d[15]), 0x3f);  // 1.0f = 0x3f800000

  binio::Reader r(d);
  EXPECT_EQ(r.u32(), 0x01020304u);
  EXPECT_EQ(r.u64(), 0x0807060504030201ull);
  EXPECT_EQ(r.f32(), 1.0f);
  EXPECT_EQ(r.remaining(), 0u);
}

TEST(Binio, ReadPastEndIsTruncated) {
  binio::Reader r(std::string_view("abc"));
  try {
    r.u32();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncatedFile);
  }
}

TEST(Binio, Fnv1aKnownVectors) {
  EXPECT_EQ(binio::fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(binio::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(binio::fnv1a64("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(binio::hex64(0xabcull), "0000000000000abc");
}
