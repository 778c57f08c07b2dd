#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace topicdpr {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatrixXf = RowMatrix<float>;
using RowMatrixXd = RowMatrix<double>;

struct Passage {
  std::string id;
  std::string page_id;
  std::string text;

  bool operator==(const Passage&) const = default;
};

/// Passages in ingestion order. The page map is derived from the passages
/// on construction and is never mutated independently.
class Corpus {
 public:
  Corpus() = default;
  /// Throws Error{kDuplicateId} or Error{kInvalidArgument} on invariant
  /// violations (empty id/page_id, repeated id).
  explicit Corpus(std::vector<Passage> passages);

  const std::vector<Passage>& passages() const noexcept { return passages_; }
  std::size_t size() const noexcept { return passages_.size(); }
  bool empty() const noexcept { return passages_.empty(); }

  /// page_id -> passage ids in ingestion order.
  const std::map<std::string, std::vector<std::string>>& pages() const noexcept { return pages_; }

  bool contains(const std::string& passage_id) const { return index_.contains(passage_id); }
  /// Throws Error{kUnknownId}.
  const Passage& at(const std::string& passage_id) const;
  const std::string& page_of(const std::string& passage_id) const { return at(passage_id).page_id; }

  bool operator==(const Corpus& other) const { return passages_ == other.passages_; }

 private:
  std::vector<Passage> passages_;
  std::map<std::string, std::vector<std::string>> pages_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Dense float32 vectors keyed by opaque string ids, one row per id.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Validates shape, id uniqueness and finiteness.
  EmbeddingMatrix(std::vector<std::string> ids, RowMatrixXf vectors);
  /// An empty matrix that still carries its dimension.
  static EmbeddingMatrix empty(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return dim_; }
  Eigen::Index count() const noexcept { return vectors_.rows(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const RowMatrixXf& vectors() const noexcept { return vectors_; }
  auto row(Eigen::Index r) const { return vectors_.row(r); }

  std::optional<Eigen::Index> find(const std::string& id) const;

  bool operator==(const EmbeddingMatrix& other) const {
    return ids_ == other.ids_ && dim_ == other.dim_ && vectors_ == other.vectors_;
  }

 private:
  std::vector<std::string> ids_;
  RowMatrixXf vectors_;
  Eigen::Index dim_ = 0;
  std::unordered_map<std::string, Eigen::Index> index_;
};

struct Turn {
  std::string speaker;
  std::string text;

  bool operator==(const Turn&) const = default;
};

struct QueryRecord {
  std::string id;
  std::vector<Turn> turns;
  std::optional<std::string> gold_page_id;
  std::optional<std::vector<std::string>> gold_passage_ids;
  std::optional<std::string> reference_response;
  std::optional<std::string> candidate_response;

  bool operator==(const QueryRecord&) const = default;
};

/// Throws Error{kInvalidArgument} when a QueryRecord invariant is broken.
void validate(const QueryRecord& query);

struct AlignmentReport {
  std::vector<std::string> missing_embeddings;  // passage ids without a vector
  std::vector<std::string> extraneous;          // vector ids not in the corpus
  bool same_order = false;

  bool aligned() const { return missing_embeddings.empty() && extraneous.empty() && same_order; }
};

AlignmentReport validate_alignment(const Corpus& corpus, const EmbeddingMatrix& emb);

}  // namespace topicdpr
