#pragma once

#include "topicdpr/topic_model.hpp"
#include "topicdpr/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace topicdpr {

struct ScoredPassage {
  std::string passage_id;
  int topic_id = 0;
  double raw_dot = 0.0;  // q . d, accumulated in double
  double score = 0.0;    // raw_dot * w[topic_id]

  bool operator==(const ScoredPassage&) const = default;
};

/// Higher score first, then ascending passage id.
struct RanksBefore {
  bool operator()(const ScoredPassage& a, const ScoredPassage& b) const {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
  }
};

/// One topic's passages and their vectors from that topic's document encoder.
struct Shard {
  int topic_id = 0;
  EmbeddingMatrix emb;

  const std::string& passage_at(Eigen::Index row) const { return emb.ids()[static_cast<std::size_t>(row)]; }
};

class ShardedIndex {
 public:
  ShardedIndex(Eigen::Index dim, std::vector<Shard> shards);

  int num_topics() const noexcept { return static_cast<int>(shards_.size()); }
  Eigen::Index dim() const noexcept { return dim_; }
  const std::vector<Shard>& shards() const noexcept { return shards_; }
  const Shard& shard(int topic_id) const { return shards_.at(static_cast<std::size_t>(topic_id)); }
  std::size_t total_passages() const noexcept { return total_; }
  std::vector<int> empty_shards() const;
  std::vector<std::size_t> shard_sizes() const;

 private:
  Eigen::Index dim_;
  std::vector<Shard> shards_;
  std::size_t total_ = 0;
};

/// Topic ids must be exactly 0..T-1, all shard ids known to the corpus and
/// no id may appear in two shards.
ShardedIndex build_index(const Corpus& corpus, const std::map<int, EmbeddingMatrix>& per_shard_emb);

/// Splits one global matrix by assignment, preserving row order within each
/// shard. Every topic in [0, num_topics) gets an entry, possibly empty.
std::map<int, EmbeddingMatrix> split_by_assignment(const EmbeddingMatrix& emb, const TopicAssignment& assignment,
                                                   int num_topics);

/// Sum of float(a_k) * q_k in double, left to right.
double dot_f64(const Eigen::Ref<const Vector<float>>& a, const Vector<double>& q);

/// The k passages of `shard` with the largest raw dot product (score == raw_dot).
std::vector<ScoredPassage> shard_topk(const Shard& shard, const Eigen::Ref<const Vector<float>>& q, int k);

/// Top-k per shard under score = raw_dot * weights[topic], then the best k of
/// the pooled k x T candidates. Weights must be finite and non-negative; they
/// are used as given, without renormalization.
std::vector<ScoredPassage> retrieve(const ShardedIndex& index, const Eigen::Ref<const Vector<float>>& q,
                                    std::span<const double> weights, int k);
std::vector<ScoredPassage> retrieve(const ShardedIndex& index, const Eigen::Ref<const Vector<float>>& q,
                                    const TopicDistribution& w, int k);

/// Exhaustive reference for `retrieve`: scores every passage, sorts globally.
std::vector<ScoredPassage> oracle_retrieve(const ShardedIndex& index, const Eigen::Ref<const Vector<float>>& q,
                                           std::span<const double> weights, int k);

// Index directory: shard_<t>.emb per topic plus manifest.json
// {"T", "dim", "shard_sizes", "corpus_hash"}.
void save_index(const std::filesystem::path& dir, const ShardedIndex& index, const Corpus& corpus);
/// Verifies the manifest against the shard files, and against `corpus` when given.
ShardedIndex load_index(const std::filesystem::path& dir, const Corpus* corpus = nullptr);

struct RetrievalRecord {
  std::string query_id;
  std::vector<ScoredPassage> ranked;
};

/// One JSON object per line: {"query_id", "ranked": [{"passage_id", "topic_id", "raw_dot", "score"}]}.
void write_retrieval(const std::filesystem::path& path, const std::vector<RetrievalRecord>& records);
std::vector<RetrievalRecord> load_retrieval(const std::filesystem::path& path);

}  // namespace topicdpr
