#pragma once

#include "topicdpr/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace topicdpr {

/// A point on the probability simplex over T topics.
class TopicDistribution {
 public:
  static constexpr double kSumTolerance = 1e-6;

  /// Throws Error{kInvalidArgument} unless every weight is finite, >= 0 and
  /// the weights sum to 1 within kSumTolerance.
  explicit TopicDistribution(Vector<double> weights);

  const Vector<double>& weights() const noexcept { return weights_; }
  Eigen::Index size() const noexcept { return weights_.size(); }
  double operator[](Eigen::Index i) const { return weights_[i]; }

  /// Index of the largest weight, lowest index on ties.
  Eigen::Index argmax() const;

 private:
  Vector<double> weights_;
};

struct TrainConfig {
  int max_iters = 100;
  /// Stop once the fraction of points changing cluster drops below this.
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  double temperature = 1.0;
  /// Independent k-means++ seedings; the one with the highest total cosine
  /// to its assigned centroid wins.
  int restarts = 1;
};

/// T unit centroids plus a softmax temperature. Immutable once built.
class TopicModel {
 public:
  /// Throws Error{kInvalidArgument} on non-finite or zero-norm centroids or
  /// a non-positive temperature.
  TopicModel(RowMatrixXf centroids, float temperature, std::size_t trained_on = 0);

  Eigen::Index num_topics() const noexcept { return centroids_.rows(); }
  Eigen::Index dim() const noexcept { return centroids_.cols(); }
  const RowMatrixXf& centroids() const noexcept { return centroids_; }
  float temperature() const noexcept { return temperature_; }
  std::size_t trained_on() const noexcept { return trained_on_; }
  const Vector<double>& centroid_norms() const noexcept { return centroid_norms_; }

 private:
  RowMatrixXf centroids_;
  Vector<double> centroid_norms_;
  float temperature_;
  std::size_t trained_on_;
};

/// Soft spherical k-means with k-means++ seeding. Deterministic given the
/// inputs and config.seed.
TopicModel train_topics(const EmbeddingMatrix& emb, int num_topics, const TrainConfig& config = {});

/// softmax_i(cos(vector, centroid_i) / temperature)
TopicDistribution infer_distribution(const TopicModel& model, const Eigen::Ref<const Vector<float>>& vector);

/// argmax of infer_distribution, ties to the lowest topic index.
int assign_cluster(const TopicModel& model, const Eigen::Ref<const Vector<float>>& vector);

/// passage id -> topic index
using TopicAssignment = std::map<std::string, int>;

TopicAssignment assign_all(const TopicModel& model, const EmbeddingMatrix& emb);

/// Top `n` terms per topic by tf-within-topic x log(T / topics containing term).
std::vector<std::vector<std::string>> top_words(const TopicModel& model, const Corpus& corpus,
                                                const TopicAssignment& assignment, int n);
std::vector<std::vector<std::string>> top_words(int num_topics, const Corpus& corpus,
                                                const TopicAssignment& assignment, int n);

using WordVectors = std::map<std::string, Vector<float>, std::less<>>;

WordVectors word_vectors_from(const EmbeddingMatrix& emb);

/// Mean over topics (with >= 2 covered words) of the mean pairwise cosine
/// between the topic's words that have vectors.
double topic_coherence(const std::vector<std::vector<std::string>>& topics, const WordVectors& word_vectors);

// "TPM1" layout, little-endian:
//   magic "TPM1" | u32 T | u32 dim | f32 temperature | T x dim f32 (row-major)
void save_model(const std::filesystem::path& path, const TopicModel& model);
TopicModel load_model(const std::filesystem::path& path);

/// Source of per-query topic distributions.
class TopicProvider {
 public:
  virtual ~TopicProvider() = default;
  virtual Eigen::Index num_topics() const = 0;
  /// `topic_input` is the vector the topic model reads for this query.
  virtual TopicDistribution distribution(std::string_view query_id,
                                         const Eigen::Ref<const Vector<float>>& topic_input) const = 0;
};

class ModelTopicProvider final : public TopicProvider {
 public:
  explicit ModelTopicProvider(const TopicModel& model) : model_(model) {}
  Eigen::Index num_topics() const override { return model_.num_topics(); }
  TopicDistribution distribution(std::string_view query_id,
                                 const Eigen::Ref<const Vector<float>>& topic_input) const override;

 private:
  const TopicModel& model_;
};

/// Distributions computed elsewhere (e.g. a real CTM), keyed by query id.
class ExternalTopicProvider final : public TopicProvider {
 public:
  explicit ExternalTopicProvider(std::map<std::string, TopicDistribution, std::less<>> distributions);
  Eigen::Index num_topics() const override { return num_topics_; }
  TopicDistribution distribution(std::string_view query_id,
                                 const Eigen::Ref<const Vector<float>>& topic_input) const override;

 private:
  std::map<std::string, TopicDistribution, std::less<>> distributions_;
  Eigen::Index num_topics_ = 0;
};

/// JSON Lines {"id": str, "weights": [float]}.
ExternalTopicProvider load_distributions(const std::filesystem::path& path);

}  // namespace topicdpr
