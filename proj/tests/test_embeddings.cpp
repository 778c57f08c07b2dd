#include "topicdpr/embeddings.hpp"
#include "topicdpr/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <sstream>

namespace topicdpr {
namespace {

// Hand-assembled EMB1 bytes, independent of the writer.
struct Emb1Builder {
  std::string bytes = "EMB1";
  void u32(std::uint32_t v) { bytes.append(reinterpret_cast<const char*>(&v), 4); }
  void u64(std::uint64_t v) { bytes.append(reinterpret_cast<const char*>(&v), 8); }
  void f32(float v) { bytes.append(reinterpret_cast<const char*>(&v), 4); }
  void row(const std::string& id, std::initializer_list<float> xs) {
    u32(static_cast<std::uint32_t>(id.size()));
    bytes += id;
    for (float x : xs) f32(x);
  }
};

std::string error_of(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_embeddings(in);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Emb1, SingleRow) {
  Emb1Builder b;
  b.u32(2);
  b.u64(1);
  b.row("p1", {1.0f, 0.0f});
  std::istringstream in(b.bytes);
  const auto e = read_embeddings(in);
  EXPECT_EQ(e.dim(), 2);
  ASSERT_EQ(e.count(), 1);
  EXPECT_EQ(e.ids()[0], "p1");
  EXPECT_EQ(e.row(0)[0], 1.0f);
  EXPECT_EQ(e.row(0)[1], 0.0f);
}

TEST(Emb1, TruncatedFileNamesLastCompleteRow) {
  Emb1Builder b;
  b.u32(2);
  b.u64(3);
  b.row("p1", {1, 0});
  b.row("p2", {0, 1});
  EXPECT_EQ(error_of(b.bytes), "unexpected end of file after row 2");
}

TEST(Emb1, RejectsBadMagicTrailingBytesAndNonFinite) {
  EXPECT_NE(error_of("EMB2xxxxxxxxxxxx").find("bad magic"), std::string::npos);

  Emb1Builder trailing;
  trailing.u32(1);
  trailing.u64(1);
  trailing.row("p1", {1});
  trailing.bytes += "z";
  EXPECT_NE(error_of(trailing.bytes).find("trailing bytes"), std::string::npos);

  Emb1Builder nan;
  nan.u32(1);
  nan.u64(1);
  nan.row("p1", {std::numeric_limits<float>::quiet_NaN()});
  EXPECT_NE(error_of(nan.bytes).find("non-finite"), std::string::npos);

  Emb1Builder dup;
  dup.u32(1);
  dup.u64(2);
  dup.row("p1", {1});
  dup.row("p1", {2});
  EXPECT_NE(error_of(dup.bytes).find("p1"), std::string::npos);
}

TEST(Emb1, RandomRoundTripIsBitwiseIdentical) {
  std::mt19937_64 rng(7);
  const auto m = testing::gaussian_matrix(50, 16, rng);
  const EmbeddingMatrix e(testing::numbered_ids("passage-", 50), m);
  testing::TempDir dir("emb");
  write_embeddings(dir / "e.emb", e);
  const auto back = load_embeddings(dir / "e.emb");
  EXPECT_EQ(back.ids(), e.ids());
  ASSERT_EQ(back.vectors().size(), m.size());
  EXPECT_EQ(std::memcmp(back.vectors().data(), m.data(), sizeof(float) * static_cast<std::size_t>(m.size())), 0);
  EXPECT_EQ(std::filesystem::file_size(dir / "e.emb"),
            4u + 4u + 8u + 50u * 4u + 50u * 16u * 4u + [&] {
              std::size_t s = 0;
              for (const auto& id : e.ids()) s += id.size();
              return s;
            }());
}

TEST(Emb1, WriterMatchesHandAssembledBytes) {
  Emb1Builder b;
  b.u32(2);
  b.u64(2);
  b.row("a", {0.5f, -1.0f});
  b.row("bc", {2.0f, 0.25f});
  std::ostringstream out;
  write_embeddings(out, testing::make_emb({"a", "bc"}, {{0.5f, -1.0f}, {2.0f, 0.25f}}));
  EXPECT_EQ(out.str(), b.bytes);
}

TEST(SelectRows, ReordersAndRejectsUnknown) {
  const auto e = testing::make_emb({"a", "b", "c"}, {{1}, {2}, {3}});
  const auto s = select_rows(e, {"c", "a"});
  EXPECT_EQ(s.ids(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(s.row(0)[0], 3.0f);
  EXPECT_THROW(select_rows(e, {"z"}), Error);
}

}  // namespace
}  // namespace topicdpr
