#include "topicdpr/error.hpp"
#include "topicdpr/topic_model.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace topicdpr {
namespace {

using testing::make_emb;
using testing::vec;

TopicModel axis_model(float tau) {
  RowMatrixXf c(2, 2);
  c << 1, 0, 0, 1;
  return TopicModel(c, tau);
}

EmbeddingMatrix two_planted_clusters(std::mt19937_64& rng, std::vector<int>* labels) {
  std::normal_distribution<float> noise(0.0f, 0.05f);
  std::vector<std::string> ids;
  RowMatrixXf m(200, 2);
  for (int i = 0; i < 200; ++i) {
    const int label = i % 2;
    m(i, 0) = (label == 0 ? 1.0f : 0.0f) + noise(rng);
    m(i, 1) = (label == 1 ? 1.0f : 0.0f) + noise(rng);
    ids.push_back("x" + std::to_string(i));
    labels->push_back(label);
  }
  return EmbeddingMatrix(ids, m);
}

double permuted_agreement(const std::vector<int>& a, const std::vector<int>& b, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hits += perm[static_cast<std::size_t>(a[i])] == b[i];
    best = std::max(best, static_cast<double>(hits) / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

TEST(TopicDistribution, Invariants) {
  EXPECT_NO_THROW(TopicDistribution(vec({0.25f, 0.75f}).cast<double>()));
  Vector<double> bad(2);
  bad << 0.6, 0.6;
  EXPECT_THROW(TopicDistribution{bad}, Error);
  bad << -0.1, 1.1;
  EXPECT_THROW(TopicDistribution{bad}, Error);
  Vector<double> tie(3);
  tie << 0.25, 0.5, 0.25;
  EXPECT_EQ(TopicDistribution(tie).argmax(), 1);
  tie << 0.4, 0.2, 0.4;
  EXPECT_EQ(TopicDistribution(tie).argmax(), 0);
}

TEST(InferDistribution, ClosedFormSoftmax) {
  const auto w = infer_distribution(axis_model(1.0f), vec({1, 0}));
  const double e = std::exp(1.0);
  EXPECT_NEAR(w[0], e / (e + 1.0), 1e-12);
  EXPECT_NEAR(w[1], 1.0 / (e + 1.0), 1e-12);
  EXPECT_NEAR(w[0], 0.731, 5e-4);
  EXPECT_NEAR(w[1], 0.269, 5e-4);
}

TEST(InferDistribution, EquidistantIsUniform) {
  const auto w = infer_distribution(axis_model(1.0f), vec({1, 1}));
  EXPECT_NEAR(w[0], 0.5, 1e-12);
  EXPECT_NEAR(w[1], 0.5, 1e-12);
}

TEST(InferDistribution, SmallTemperatureApproachesOneHot) {
  const auto w = infer_distribution(axis_model(1e-6f), vec({0.9f, 0.1f}));
  EXPECT_NEAR(w[0], 1.0, 1e-6);
  EXPECT_NEAR(w[1], 0.0, 1e-6);
}

TEST(InferDistribution, ScaleInvariantAndRejectsBadInput) {
  const auto model = axis_model(0.5f);
  const auto a = infer_distribution(model, vec({0.3f, 0.7f}));
  const auto b = infer_distribution(model, vec({3.0f, 7.0f}));
  EXPECT_NEAR(a[0], b[0], 1e-6);
  EXPECT_THROW(infer_distribution(model, vec({0, 0})), Error);
  EXPECT_THROW(infer_distribution(model, vec({1, 0, 0})), Error);
}

TEST(AssignCluster, ExactCentroidAndTieRule) {
  RowMatrixXf c(4, 4);
  c.setIdentity();
  const TopicModel model(c, 0.1f);
  EXPECT_EQ(assign_cluster(model, vec({0, 0, 1, 0})), 2);
  EXPECT_EQ(assign_cluster(model, vec({0, 1, 0, 1})), 1);
}

TEST(TrainTopics, SingleTopicIsNormalizedMeanOfNormalizedVectors) {
  std::mt19937_64 rng(3);
  const auto m = testing::gaussian_matrix(30, 5, rng);
  const EmbeddingMatrix emb(testing::numbered_ids("v", 30), m);
  const auto model = train_topics(emb, 1);
  Vector<double> mean = Vector<double>::Zero(5);
  for (Eigen::Index r = 0; r < m.rows(); ++r) mean += m.row(r).cast<double>().transpose() / m.row(r).cast<double>().norm();
  mean /= mean.norm();
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(model.centroids()(0, i), mean[i], 1e-6);
  EXPECT_EQ(model.trained_on(), 30u);
}

TEST(TrainTopics, RecoversTwoPlantedClusters) {
  std::mt19937_64 rng(11);
  std::vector<int> planted;
  const auto emb = two_planted_clusters(rng, &planted);
  const auto model = train_topics(emb, 2, {.seed = 5});
  std::vector<int> found;
  for (Eigen::Index r = 0; r < emb.count(); ++r) found.push_back(assign_cluster(model, emb.row(r).transpose()));
  EXPECT_GE(permuted_agreement(found, planted, 2), 0.95);
}

TEST(TrainTopics, IdenticalVectorsAreDegenerate) {
  std::vector<std::vector<float>> rows(10, {0.6f, 0.8f});
  const auto emb = make_emb(testing::numbered_ids("v", 10), rows);
  try {
    train_topics(emb, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateInput);
    EXPECT_STREQ(e.what(), "fewer distinct directions than T");
  }
}

TEST(TrainTopics, DeterministicForSeedAndValidatesArguments) {
  std::mt19937_64 rng(1);
  const EmbeddingMatrix emb(testing::numbered_ids("v", 60), testing::gaussian_matrix(60, 8, rng));
  const TrainConfig config{.seed = 9, .restarts = 3};
  EXPECT_EQ(train_topics(emb, 4, config).centroids(), train_topics(emb, 4, config).centroids());
  EXPECT_THROW(train_topics(emb, 0), Error);
  EXPECT_THROW(train_topics(emb, 61), Error);
}

TEST(TopWords, TfIdfHandExample) {
  Corpus corpus({{"a1", "pa", "red red blue"}, {"a2", "pa", "red red blue"}, {"b1", "pb", "green grass"}});
  const TopicAssignment assignment{{"a1", 0}, {"a2", 0}, {"b1", 1}};
  const auto words = top_words(2, corpus, assignment, 2);
  EXPECT_EQ(words[0], (std::vector<std::string>{"red", "blue"}));
}

TEST(TopWords, SharedTermsRankLastAndEmptyTopicIsEmpty) {
  Corpus corpus({{"a", "p", "shared alpha"}, {"b", "p", "shared shared shared beta"}});
  const TopicAssignment assignment{{"a", 0}, {"b", 1}};
  EXPECT_EQ(top_words(2, corpus, assignment, 5)[1], (std::vector<std::string>{"beta", "shared"}));
  EXPECT_TRUE(top_words(3, corpus, assignment, 5)[2].empty());

  const auto all_shared = top_words(1, Corpus({{"a", "p", "one two"}}), {{"a", 0}}, 5);
  EXPECT_EQ(all_shared[0], (std::vector<std::string>{"one", "two"}));
}

TEST(TopWords, RejectsIncompleteAssignment) {
  Corpus corpus({{"a", "p", "x"}, {"b", "p", "y"}});
  EXPECT_THROW(top_words(2, corpus, {{"a", 0}}, 3), Error);
  EXPECT_THROW(top_words(2, corpus, {{"a", 0}, {"b", 2}}, 3), Error);
}

TEST(Coherence, IdenticalAndOrthogonal) {
  WordVectors same{{"x", vec({1, 2})}, {"y", vec({2, 4})}, {"z", vec({0.5f, 1})}};
  EXPECT_NEAR(topic_coherence({{"x", "y", "z"}}, same), 1.0, 1e-12);
  WordVectors ortho{{"x", vec({1, 0})}, {"y", vec({0, 1})}};
  EXPECT_NEAR(topic_coherence({{"x", "y"}}, ortho), 0.0, 1e-12);
}

TEST(Coherence, MeanOfPerTopicMeans) {
  WordVectors wv{{"a", vec({1, 0, 0})}, {"b", vec({1, 1, 0})}, {"c", vec({0, 0, 1})},
                 {"d", vec({0, 1, 0})}, {"e", vec({0, 1, 1})}, {"f", vec({1, 1, 1})}};
  const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0), s6 = std::sqrt(6.0);
  const double topic1 = (1.0 / s2 + 0.0 + 0.0) / 3.0;
  const double topic2 = (1.0 / s2 + 1.0 / s3 + 2.0 / s6) / 3.0;
  EXPECT_NEAR(topic_coherence({{"a", "b", "c"}, {"d", "e", "f", "unknown"}}, wv), (topic1 + topic2) / 2.0, 1e-9);
  EXPECT_THROW(topic_coherence({{"a"}, {"unknown", "c"}}, wv), Error);
}

TEST(ModelFile, RoundTripAndCorruption) {
  std::mt19937_64 rng(2);
  const TopicModel model(testing::gaussian_matrix(3, 6, rng), 0.25f);
  testing::TempDir dir("model");
  save_model(dir / "m.tpm", model);
  const auto back = load_model(dir / "m.tpm");
  EXPECT_EQ(back.centroids(), model.centroids());
  EXPECT_EQ(back.temperature(), 0.25f);
  EXPECT_EQ(std::filesystem::file_size(dir / "m.tpm"), 4u + 4u + 4u + 4u + 3u * 6u * 4u);

  auto bytes = testing::read_file(dir / "m.tpm");
  testing::write_file(dir / "short.tpm", bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(load_model(dir / "short.tpm"), Error);
  bytes[0] = 'X';
  testing::write_file(dir / "magic.tpm", bytes);
  EXPECT_THROW(load_model(dir / "magic.tpm"), Error);
}

TEST(ExternalDistributions, LoadAndLookup) {
  testing::TempDir dir("dist");
  testing::write_file(dir / "d.jsonl", R"({"id": "q1", "weights": [0.2, 0.8]}
{"id": "q2", "weights": [1.0, 0.0]}
)");
  const auto provider = load_distributions(dir / "d.jsonl");
  EXPECT_EQ(provider.num_topics(), 2);
  EXPECT_DOUBLE_EQ(provider.distribution("q1", vec({0, 0}))[1], 0.8);
  EXPECT_THROW(provider.distribution("q9", vec({0, 0})), Error);

  testing::write_file(dir / "bad.jsonl", R"({"id": "q1", "weights": [0.2, 0.7]})" "\n");
  EXPECT_THROW(load_distributions(dir / "bad.jsonl"), Error);
}

}  // namespace
}  // namespace topicdpr
