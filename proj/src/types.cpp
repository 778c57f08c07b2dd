#include "topicdpr/error.hpp"
#include "topicdpr/types.hpp"

#include <cmath>
#include <unordered_set>

namespace topicdpr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kUnknownId: return "unknown_id";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kMissingField: return "missing_field";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kUsage: return "usage";
  }
  return "unknown";
}

Corpus::Corpus(std::vector<Passage> passages) : passages_(std::move(passages)) {
  index_.reserve(passages_.size());
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    const auto& p = passages_[i];
    if (p.id.empty()) throw Error(ErrorCode::kInvalidArgument, "passage " + std::to_string(i) + " has an empty id");
    if (p.page_id.empty()) throw Error(ErrorCode::kInvalidArgument, "passage \"" + p.id + "\" has an empty page_id");
    if (!index_.emplace(p.id, i).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate passage id \"" + p.id + "\"");
    }
    pages_[p.page_id].push_back(p.id);
  }
}

const Passage& Corpus::at(const std::string& passage_id) const {
  auto it = index_.find(passage_id);
  if (it == index_.end()) throw Error(ErrorCode::kUnknownId, "unknown passage id \"" + passage_id + "\"");
  return passages_[it->second];
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, RowMatrixXf vectors)
    : ids_(std::move(ids)), vectors_(std::move(vectors)), dim_(vectors_.cols()) {
  if (dim_ <= 0) throw Error(ErrorCode::kInvalidArgument, "embedding dim must be positive");
  if (static_cast<Eigen::Index>(ids_.size()) != vectors_.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding ids (" + std::to_string(ids_.size()) +
                                                 ") and rows (" + std::to_string(vectors_.rows()) + ") differ");
  }
  index_.reserve(ids_.size());
  for (Eigen::Index r = 0; r < vectors_.rows(); ++r) {
    const auto& id = ids_[static_cast<std::size_t>(r)];
    if (!index_.emplace(id, r).second) throw Error(ErrorCode::kDuplicateId, "duplicate embedding id \"" + id + "\"");
    for (Eigen::Index c = 0; c < dim_; ++c) {
      if (!std::isfinite(vectors_(r, c))) {
        throw Error(ErrorCode::kFormat, "non-finite value at row " + std::to_string(r) + ", column " +
                                            std::to_string(c));
      }
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::empty(Eigen::Index dim) { return EmbeddingMatrix({}, RowMatrixXf(0, dim)); }

std::optional<Eigen::Index> EmbeddingMatrix::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void validate(const QueryRecord& query) {
  if (query.turns.empty()) throw Error(ErrorCode::kInvalidArgument, "query \"" + query.id + "\" has no turns");
  if (query.gold_passage_ids && query.gold_passage_ids->empty()) {
    throw Error(ErrorCode::kInvalidArgument, "query \"" + query.id + "\" has an empty gold_passage_ids list");
  }
}

AlignmentReport validate_alignment(const Corpus& corpus, const EmbeddingMatrix& emb) {
  AlignmentReport report;
  for (const auto& p : corpus.passages()) {
    if (!emb.find(p.id)) report.missing_embeddings.push_back(p.id);
  }
  for (const auto& id : emb.ids()) {
    if (!corpus.contains(id)) report.extraneous.push_back(id);
  }
  report.same_order = corpus.size() == emb.ids().size();
  for (std::size_t i = 0; report.same_order && i < corpus.size(); ++i) {
    report.same_order = corpus.passages()[i].id == emb.ids()[i];
  }
  return report;
}

}  // namespace topicdpr
