#include "topicdpr/error.hpp"
#include "topicdpr/sharded_index.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace topicdpr {
namespace {

using testing::make_emb;
using testing::vec;

// Two shards: {p1:(1,0), p2:(0.8,0)} and {p3:(0,1), p4:(0,0.5)}.
ShardedIndex small_index() {
  return ShardedIndex(2, {{0, make_emb({"p1", "p2"}, {{1, 0}, {0.8f, 0}})}, {1, make_emb({"p3", "p4"}, {{0, 1}, {0, 0.5f}})}});
}

std::vector<std::string> ids_of(const std::vector<ScoredPassage>& ranked) {
  std::vector<std::string> ids;
  for (const auto& s : ranked) ids.push_back(s.passage_id);
  return ids;
}

// Brute-force reference kept separate from the library: score every
// passage, then stable-sort by (score desc, id asc).
std::vector<ScoredPassage> brute_force(const ShardedIndex& index, const Vector<float>& q, const std::vector<double>& w,
                                       int k) {
  std::vector<ScoredPassage> all;
  for (const auto& shard : index.shards()) {
    for (Eigen::Index r = 0; r < shard.emb.count(); ++r) {
      double raw = 0.0;
      for (Eigen::Index i = 0; i < q.size(); ++i) raw += double(shard.emb.vectors()(r, i)) * double(q[i]);
      double score = raw * w[std::size_t(shard.topic_id)];
      if (score == 0.0) score = 0.0;
      all.push_back({shard.passage_at(r), shard.topic_id, raw, score});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.score > b.score || (a.score == b.score && a.passage_id < b.passage_id);
  });
  if (all.size() > std::size_t(k)) all.resize(std::size_t(k));
  return all;
}

TEST(ShardedIndex, ConstructionCounts) {
  const auto index = ShardedIndex(2, {{0, make_emb({"a", "b", "c"}, {{1, 0}, {0, 1}, {1, 1}})},
                                      {1, make_emb({"d", "e"}, {{1, 0}, {0, 1}})}});
  EXPECT_EQ(index.num_topics(), 2);
  EXPECT_EQ(index.total_passages(), 5u);
  EXPECT_EQ(index.shard_sizes(), (std::vector<std::size_t>{3, 2}));
}

TEST(ShardedIndex, PassageInTwoShardsIsNamed) {
  try {
    ShardedIndex(2, {{0, make_emb({"p1"}, {{1, 0}})}, {1, make_emb({"p1"}, {{0, 1}})}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
    EXPECT_NE(std::string(e.what()).find("p1"), std::string::npos);
  }
}

TEST(ShardedIndex, RejectsBadTopicIdsAndDims) {
  EXPECT_THROW(ShardedIndex(2, {{1, make_emb({"a"}, {{1, 0}})}}), Error);
  EXPECT_THROW(ShardedIndex(2, {{0, make_emb({"a"}, {{1, 0, 0}})}}), Error);
  EXPECT_THROW(ShardedIndex(2, {}), Error);
}

TEST(SplitByAssignment, ShardSizesMatchHistogram) {
  std::mt19937_64 rng(4);
  const auto ids = testing::numbered_ids("p", 40);
  const EmbeddingMatrix emb(ids, testing::gaussian_matrix(40, 3, rng));
  TopicAssignment assignment;
  std::vector<std::size_t> histogram(5, 0);
  std::uniform_int_distribution<int> topic(0, 3);  // topic 4 stays empty
  std::vector<Passage> passages;
  for (const auto& id : ids) {
    const int t = topic(rng);
    assignment[id] = t;
    ++histogram[std::size_t(t)];
    passages.push_back({id, "pg", ""});
  }
  const auto index = build_index(Corpus(passages), split_by_assignment(emb, assignment, 5));
  EXPECT_EQ(index.shard_sizes(), histogram);
  EXPECT_EQ(index.empty_shards(), std::vector<int>{4});
  for (const auto& shard : index.shards()) {
    EXPECT_TRUE(std::is_sorted(shard.emb.ids().begin(), shard.emb.ids().end(), [&](const auto& a, const auto& b) {
      return *emb.find(a) < *emb.find(b);
    }));
  }
}

TEST(BuildIndex, RejectsUnknownPassage) {
  Corpus corpus({{"p1", "pg", ""}});
  std::map<int, EmbeddingMatrix> shards{{0, make_emb({"zz"}, {{1, 0}})}};
  EXPECT_THROW(build_index(corpus, shards), Error);
}

TEST(ShardTopK, ExhaustiveDotProducts) {
  const auto index = small_index();
  const auto top = shard_topk(index.shard(0), vec({1, 1}), 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].passage_id, "p1");
  EXPECT_DOUBLE_EQ(top[0].raw_dot, 1.0);
}

TEST(ShardTopK, WholeShardWhenKExceedsSizeAndIdTieBreak) {
  const Shard shard{0, make_emb({"c", "a", "b"}, {{1, 0}, {1, 0}, {2, 0}})};
  EXPECT_EQ(ids_of(shard_topk(shard, vec({1, 0}), 10)), (std::vector<std::string>{"b", "a", "c"}));
}

TEST(Retrieve, WeightedTwoShardExample) {
  const std::vector<double> w{0.25, 0.75};
  const auto ranked = retrieve(small_index(), vec({1, 1}), w, 2);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].passage_id, "p3");
  EXPECT_DOUBLE_EQ(ranked[0].score, 0.75);
  EXPECT_EQ(ranked[1].passage_id, "p4");
  EXPECT_DOUBLE_EQ(ranked[1].score, 0.375);
  EXPECT_EQ(ranked[1].topic_id, 1);
  EXPECT_DOUBLE_EQ(ranked[1].raw_dot, 0.5);
}

TEST(Retrieve, OneHotZeroesOtherShard) {
  const std::vector<double> w{1.0, 0.0};
  const auto ranked = retrieve(small_index(), vec({1, 1}), w, 4);
  EXPECT_EQ(ids_of(ranked), (std::vector<std::string>{"p1", "p2", "p3", "p4"}));
  EXPECT_EQ(ranked[2].score, 0.0);
  EXPECT_EQ(ranked[3].score, 0.0);
  EXPECT_FALSE(std::signbit(ranked[3].score));
}

TEST(Retrieve, ZeroWeightNegativeDotsNormalizeToPositiveZero) {
  const std::vector<double> w{0.0, 1.0};
  for (const auto& s : retrieve(small_index(), vec({-1, 0}), w, 4)) EXPECT_FALSE(std::signbit(s.score)) << s.passage_id;
}

TEST(Retrieve, ZeroWeightTiesResolveById) {
  // Shard 0 has three zero-weight passages; the merge must keep the lowest ids.
  const ShardedIndex index(1, {{0, make_emb({"z", "m", "a"}, {{5}, {3}, {1}})}, {1, make_emb({"b"}, {{-1}})}});
  const std::vector<double> w{0.0, 1.0};
  EXPECT_EQ(ids_of(retrieve(index, vec({1}), w, 2)), (std::vector<std::string>{"a", "m"}));
}

TEST(Retrieve, ValidatesArguments) {
  const auto index = small_index();
  EXPECT_THROW(retrieve(index, vec({1, 1}), std::vector<double>{1.0}, 2), Error);
  EXPECT_THROW(retrieve(index, vec({1, 1}), std::vector<double>{-0.5, 1.5}, 2), Error);
  EXPECT_THROW(retrieve(index, vec({1, 1, 1}), std::vector<double>{0.5, 0.5}, 2), Error);
  EXPECT_THROW(retrieve(index, vec({1, 1}), std::vector<double>{0.5, 0.5}, 0), Error);
}

TEST(OracleRetrieve, KLargerThanCorpusReturnsEverything) {
  const std::vector<double> w{0.5, 0.5};
  EXPECT_EQ(oracle_retrieve(small_index(), vec({1, 1}), w, 50).size(), 4u);
}

TEST(OracleRetrieve, RandomInstancesAgreeWithRetrieveAndBruteForce) {
  std::mt19937_64 rng(1234);
  const auto ids = testing::numbered_ids("doc", 500);
  const EmbeddingMatrix emb(ids, testing::gaussian_matrix(500, 32, rng));
  TopicAssignment assignment;
  std::uniform_int_distribution<int> topic(0, 7);
  std::vector<Passage> passages;
  for (const auto& id : ids) {
    assignment[id] = topic(rng);
    passages.push_back({id, "pg", ""});
  }
  const auto index = build_index(Corpus(passages), split_by_assignment(emb, assignment, 8));
  std::gamma_distribution<double> gamma(0.5, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector<float> q = testing::gaussian_matrix(1, 32, rng).row(0).transpose();
    std::vector<double> w(8);
    for (auto& x : w) x = trial % 4 == 0 ? 0.0 : gamma(rng);
    if (trial % 4 == 0) w[std::size_t(trial % 8)] = 1.0;
    for (int k : {1, 5, 10}) {
      const auto fast = retrieve(index, q, w, k);
      ASSERT_EQ(fast, oracle_retrieve(index, q, w, k));
      ASSERT_EQ(fast, brute_force(index, q, w, k));
    }
  }
}

TEST(IndexFiles, RoundTripAndManifestChecks) {
  Corpus corpus({{"p1", "pgA", "x"}, {"p2", "pgA", "y"}, {"p3", "pgB", "z"}, {"p4", "pgB", "w"}});
  const ShardedIndex index(2, {{0, make_emb({"p1", "p2"}, {{1, 0}, {0.8f, 0}})},
                               {1, make_emb({"p3", "p4"}, {{0, 1}, {0, 0.5f}})}});
  testing::TempDir dir("index");
  save_index(dir.path(), index, corpus);
  const auto back = load_index(dir.path(), &corpus);
  EXPECT_EQ(back.shard_sizes(), index.shard_sizes());
  EXPECT_EQ(back.shard(1).emb, index.shard(1).emb);

  Corpus other({{"p1", "pgA", "changed"}, {"p2", "pgA", "y"}, {"p3", "pgB", "z"}, {"p4", "pgB", "w"}});
  EXPECT_THROW(load_index(dir.path(), &other), Error);
  std::filesystem::remove(dir / "shard_1.emb");
  EXPECT_THROW(load_index(dir.path()), Error);
}

TEST(RetrievalFile, RoundTrip) {
  testing::TempDir dir("retrieval");
  const std::vector<RetrievalRecord> records{{"q1", {{"p1", 0, 1.5, 0.75}, {"p2", 1, -0.25, 0.0}}}, {"q2", {}}};
  write_retrieval(dir / "r.jsonl", records);
  const auto back = load_retrieval(dir / "r.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].query_id, "q1");
  EXPECT_EQ(back[0].ranked, records[0].ranked);
  EXPECT_TRUE(back[1].ranked.empty());
}

}  // namespace
}  // namespace topicdpr
