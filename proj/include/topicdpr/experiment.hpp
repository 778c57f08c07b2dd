#pragma once

#include "topicdpr/metrics.hpp"
#include "topicdpr/sharded_index.hpp"
#include "topicdpr/topic_model.hpp"
#include "topicdpr/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace topicdpr {

/// A query with the vectors the pipeline needs. `topic_context` is what the
/// topic model reads; when empty the retrieval vector is used instead.
struct EvalQuery {
  QueryRecord record;
  Vector<float> vector;
  Vector<float> topic_context;

  const Vector<float>& topic_input() const { return topic_context.size() > 0 ? topic_context : vector; }
};

/// Pairs query records with rows of the query (and optional context) matrices by id.
std::vector<EvalQuery> attach_vectors(const std::vector<QueryRecord>& records, const EmbeddingMatrix& query_emb,
                                      const EmbeddingMatrix* context_emb = nullptr);

enum class Metric { kRecall, kPageP1, kF1, kKiltF1 };

struct EvalOptions {
  int k = 10;
  int recall_k = 5;
  /// Empty: compute every metric the gold fields allow. Otherwise each listed
  /// metric is required and a query lacking its gold field is an error.
  std::set<Metric> metrics;
  /// Cross-check every retrieval against oracle_retrieve.
  bool check_oracle = false;
};

/// Parses "r@5,p@1,f1,kilt-f1". The r@N suffix sets recall_k.
std::set<Metric> parse_metrics(const std::string& spec, int* recall_k);

struct EvalRun {
  EvalReport report;
  std::vector<RetrievalRecord> retrievals;
};

EvalRun run_eval(const ShardedIndex& index, const TopicProvider& topics, const Corpus& corpus,
                 const std::vector<EvalQuery>& queries, const EvalOptions& options);
EvalRun run_eval(const ShardedIndex& index, const TopicModel& model, const Corpus& corpus,
                 const std::vector<EvalQuery>& queries, const EvalOptions& options);

struct SyntheticSpec {
  int true_topics = 4;
  int passages_per_topic = 50;
  int dim = 2048;
  double noise_sigma = 0.05;
  int queries_per_topic = 20;
  int vocab_per_topic = 30;
  int words_per_passage = 12;
  /// Per-component noise added to the gold passage to form the query vector.
  double query_noise = 0.4;
  /// Per-component noise around the topic centroid for the topic-context vector.
  double context_noise = 0.02;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  Corpus corpus;
  EmbeddingMatrix passages;
  std::vector<EvalQuery> validation;
  std::vector<EvalQuery> test;
  TopicAssignment planted;
  RowMatrixXf centroids;
  EmbeddingMatrix word_vectors;
};

inline constexpr int kSyntheticPageSize = 4;

SyntheticData generate_synthetic(const SyntheticSpec& spec);

struct SweepRow {
  double validation_r_at_k = 0.0;
  double test_r_at_k = 0.0;
  std::optional<double> coherence;
};

struct SweepResult {
  std::map<int, SweepRow> per_t;
  int chosen_t = 1;
};

struct SweepConfig {
  TrainConfig train;
  int k = 10;
  int recall_k = 5;
  int top_words = 10;
  bool check_oracle = true;
};

/// Validation R@k argmax, smallest T on ties.
int choose_t(const std::map<int, SweepRow>& per_t);

SweepResult sweep_t(const Corpus& corpus, const EmbeddingMatrix& train_emb, const std::vector<EvalQuery>& validation,
                    const std::vector<EvalQuery>& test, int t_min, int t_max, const SweepConfig& config,
                    const WordVectors* word_vectors = nullptr);

}  // namespace topicdpr
