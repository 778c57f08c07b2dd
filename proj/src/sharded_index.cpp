#include "topicdpr/sharded_index.hpp"

#include "topicdpr/corpus.hpp"
#include "topicdpr/embeddings.hpp"
#include "topicdpr/error.hpp"
#include "topicdpr/top_k.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

namespace topicdpr {

using nlohmann::json;

namespace {

double dot_raw(const float* a, const double* q, Eigen::Index n) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += static_cast<double>(a[i]) * q[i];
  return s;
}

void check_query(const ShardedIndex& index, const Eigen::Ref<const Vector<float>>& q, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (q.size() != index.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(q.size()) + " does not match index dim " +
                                                   std::to_string(index.dim()));
  }
}

void check_weights(const ShardedIndex& index, std::span<const double> weights) {
  if (static_cast<int>(weights.size()) != index.num_topics()) {
    throw Error(ErrorCode::kDimensionMismatch, "topic distribution has " + std::to_string(weights.size()) +
                                                   " weights but the index has " +
                                                   std::to_string(index.num_topics()) + " shards");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "topic weight " + std::to_string(i) + " is negative or non-finite");
    }
  }
}

// Scores are recorded exactly as raw_dot * weight, except that a -0.0
// product is stored as +0.0.
double weighted(double raw_dot, double weight) {
  const double score = raw_dot * weight;
  return score == 0.0 ? 0.0 : score;
}

// Best k of one shard under (weighted score desc, id asc). Ranking by the
// weighted score keeps this exact against the global order even when the
// weight is zero and every candidate ties at 0.
std::vector<ScoredPassage> shard_candidates(const Shard& shard, const Vector<double>& q, double weight, int k) {
  BoundedTopK<ScoredPassage, RanksBefore> top(static_cast<std::size_t>(k));
  const auto& vectors = shard.emb.vectors();
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    const double raw = dot_raw(vectors.row(r).data(), q.data(), q.size());
    const double score = weighted(raw, weight);
    if (top.full()) {
      const auto& worst = top.worst();
      if (score < worst.score || (score == worst.score && shard.passage_at(r) > worst.passage_id)) continue;
    }
    top.push(ScoredPassage{shard.passage_at(r), shard.topic_id, raw, score});
  }
  return std::move(top).take_sorted();
}

}  // namespace

ShardedIndex::ShardedIndex(Eigen::Index dim, std::vector<Shard> shards) : dim_(dim), shards_(std::move(shards)) {
  if (dim_ < 1) throw Error(ErrorCode::kInvalidArgument, "index dim must be positive");
  if (shards_.empty()) throw Error(ErrorCode::kInvalidArgument, "index needs at least one shard");
  std::unordered_map<std::string, int> owner;
  for (std::size_t t = 0; t < shards_.size(); ++t) {
    auto& shard = shards_[t];
    if (shard.topic_id != static_cast<int>(t)) {
      throw Error(ErrorCode::kInvalidArgument, "shard " + std::to_string(t) + " carries topic id " +
                                                   std::to_string(shard.topic_id));
    }
    if (shard.emb.count() == 0 && shard.emb.dim() != dim_) shard.emb = EmbeddingMatrix::empty(dim_);
    if (shard.emb.dim() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "shard " + std::to_string(t) + " has dim " +
                                                     std::to_string(shard.emb.dim()) + ", index dim is " +
                                                     std::to_string(dim_));
    }
    for (const auto& id : shard.emb.ids()) {
      if (auto [it, fresh] = owner.emplace(id, shard.topic_id); !fresh) {
        throw Error(ErrorCode::kDuplicateId, "passage \"" + id + "\" appears in shards " +
                                                 std::to_string(it->second) + " and " +
                                                 std::to_string(shard.topic_id));
      }
    }
    total_ += shard.emb.ids().size();
  }
}

std::vector<int> ShardedIndex::empty_shards() const {
  std::vector<int> out;
  for (const auto& s : shards_) {
    if (s.emb.count() == 0) out.push_back(s.topic_id);
  }
  return out;
}

std::vector<std::size_t> ShardedIndex::shard_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& s : shards_) out.push_back(static_cast<std::size_t>(s.emb.count()));
  return out;
}

ShardedIndex build_index(const Corpus& corpus, const std::map<int, EmbeddingMatrix>& per_shard_emb) {
  if (per_shard_emb.empty()) throw Error(ErrorCode::kInvalidArgument, "no shards given");
  int expected = 0;
  Eigen::Index dim = 0;
  for (const auto& [topic, emb] : per_shard_emb) {
    if (topic != expected++) {
      throw Error(ErrorCode::kInvalidArgument, "shard topic ids must be exactly 0..T-1; got " + std::to_string(topic));
    }
    if (emb.dim() > 0) {
      if (dim == 0) dim = emb.dim();
      if (emb.dim() != dim) {
        throw Error(ErrorCode::kDimensionMismatch, "shard " + std::to_string(topic) + " has dim " +
                                                       std::to_string(emb.dim()) + ", expected " + std::to_string(dim));
      }
    }
    for (const auto& id : emb.ids()) {
      if (!corpus.contains(id)) {
        throw Error(ErrorCode::kUnknownId, "shard " + std::to_string(topic) + " holds unknown passage \"" + id + "\"");
      }
    }
  }
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "every shard lacks a dimension");
  std::vector<Shard> shards;
  for (const auto& [topic, emb] : per_shard_emb) shards.push_back(Shard{topic, emb});
  return ShardedIndex(dim, std::move(shards));
}

std::map<int, EmbeddingMatrix> split_by_assignment(const EmbeddingMatrix& emb, const TopicAssignment& assignment,
                                                   int num_topics) {
  if (num_topics < 1) throw Error(ErrorCode::kInvalidArgument, "number of topics must be >= 1");
  std::vector<std::vector<std::string>> members(static_cast<std::size_t>(num_topics));
  for (const auto& id : emb.ids()) {
    auto it = assignment.find(id);
    if (it == assignment.end()) throw Error(ErrorCode::kMissingField, "passage \"" + id + "\" has no topic assignment");
    if (it->second < 0 || it->second >= num_topics) {
      throw Error(ErrorCode::kInvalidArgument, "passage \"" + id + "\" assigned to out-of-range topic " +
                                                   std::to_string(it->second));
    }
    members[static_cast<std::size_t>(it->second)].push_back(id);
  }
  std::map<int, EmbeddingMatrix> out;
  for (int t = 0; t < num_topics; ++t) {
    const auto& ids = members[static_cast<std::size_t>(t)];
    out.emplace(t, ids.empty() ? EmbeddingMatrix::empty(emb.dim()) : select_rows(emb, ids));
  }
  return out;
}

double dot_f64(const Eigen::Ref<const Vector<float>>& a, const Vector<double>& q) {
  if (a.size() != q.size()) throw Error(ErrorCode::kDimensionMismatch, "dot product of mismatched dims");
  Vector<float> contiguous = a;
  return dot_raw(contiguous.data(), q.data(), q.size());
}

std::vector<ScoredPassage> shard_topk(const Shard& shard, const Eigen::Ref<const Vector<float>>& q, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (q.size() != shard.emb.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(q.size()) + " does not match shard dim " +
                                                   std::to_string(shard.emb.dim()));
  }
  return shard_candidates(shard, q.cast<double>(), 1.0, k);
}

std::vector<ScoredPassage> retrieve(const ShardedIndex& index, const Eigen::Ref<const Vector<float>>& q,
                                    std::span<const double> weights, int k) {
  check_query(index, q, k);
  check_weights(index, weights);
  const Vector<double> qd = q.cast<double>();
  std::vector<ScoredPassage> pool;
  pool.reserve(static_cast<std::size_t>(k) * index.shards().size());
  for (const auto& shard : index.shards()) {
    auto top = shard_candidates(shard, qd, weights[static_cast<std::size_t>(shard.topic_id)], k);
    std::move(top.begin(), top.end(), std::back_inserter(pool));
  }
  const auto keep = std::min(pool.size(), static_cast<std::size_t>(k));
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), RanksBefore{});
  pool.resize(keep);
  return pool;
}

std::vector<ScoredPassage> retrieve(const ShardedIndex& index, const Eigen::Ref<const Vector<float>>& q,
                                    const TopicDistribution& w, int k) {
  return retrieve(index, q, std::span<const double>(w.weights().data(), static_cast<std::size_t>(w.size())), k);
}

std::vector<ScoredPassage> oracle_retrieve(const ShardedIndex& index, const Eigen::Ref<const Vector<float>>& q,
                                           std::span<const double> weights, int k) {
  check_query(index, q, k);
  check_weights(index, weights);
  const Vector<double> qd = q.cast<double>();
  std::vector<ScoredPassage> all;
  all.reserve(index.total_passages());
  for (const auto& shard : index.shards()) {
    const double w = weights[static_cast<std::size_t>(shard.topic_id)];
    for (Eigen::Index r = 0; r < shard.emb.count(); ++r) {
      const double raw = dot_raw(shard.emb.vectors().row(r).data(), qd.data(), qd.size());
      all.push_back(ScoredPassage{shard.passage_at(r), shard.topic_id, raw, weighted(raw, w)});
    }
  }
  std::sort(all.begin(), all.end(), RanksBefore{});
  if (all.size() > static_cast<std::size_t>(k)) all.resize(static_cast<std::size_t>(k));
  return all;
}

void save_index(const std::filesystem::path& dir, const ShardedIndex& index, const Corpus& corpus) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& shard : index.shards()) {
    write_embeddings(dir / ("shard_" + std::to_string(shard.topic_id) + ".emb"), shard.emb);
  }
  json manifest{{"T", index.num_topics()},
                {"dim", index.dim()},
                {"shard_sizes", index.shard_sizes()},
                {"corpus_hash", corpus_hash(corpus)}};
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

ShardedIndex load_index(const std::filesystem::path& dir, const Corpus* corpus) {
  std::ifstream in(dir / "manifest.json", std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string("manifest.json: ") + e.what());
  }
  int t = 0;
  Eigen::Index dim = 0;
  std::vector<std::size_t> sizes;
  std::string hash;
  try {
    t = manifest.at("T").get<int>();
    dim = manifest.at("dim").get<Eigen::Index>();
    sizes = manifest.at("shard_sizes").get<std::vector<std::size_t>>();
    hash = manifest.at("corpus_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("manifest.json: ") + e.what());
  }
  if (t < 1 || static_cast<int>(sizes.size()) != t) {
    throw Error(ErrorCode::kFormat, "manifest.json: T and shard_sizes disagree");
  }
  if (corpus && corpus_hash(*corpus) != hash) {
    throw Error(ErrorCode::kInvalidArgument, "index was built from a different corpus (hash " + hash + ")");
  }
  std::vector<Shard> shards;
  for (int topic = 0; topic < t; ++topic) {
    auto emb = load_embeddings(dir / ("shard_" + std::to_string(topic) + ".emb"));
    if (static_cast<std::size_t>(emb.count()) != sizes[static_cast<std::size_t>(topic)]) {
      throw Error(ErrorCode::kFormat, "shard " + std::to_string(topic) + " holds " + std::to_string(emb.count()) +
                                          " rows, manifest says " + std::to_string(sizes[static_cast<std::size_t>(topic)]));
    }
    if (corpus) {
      for (const auto& id : emb.ids()) {
        if (!corpus->contains(id)) throw Error(ErrorCode::kUnknownId, "index holds unknown passage \"" + id + "\"");
      }
    }
    shards.push_back(Shard{topic, std::move(emb)});
  }
  return ShardedIndex(dim, std::move(shards));
}

void write_retrieval(const std::filesystem::path& path, const std::vector<RetrievalRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& rec : records) {
    json ranked = json::array();
    for (const auto& s : rec.ranked) {
      ranked.push_back({{"passage_id", s.passage_id}, {"topic_id", s.topic_id}, {"raw_dot", s.raw_dot}, {"score", s.score}});
    }
    out << json{{"query_id", rec.query_id}, {"ranked", std::move(ranked)}}.dump() << '\n';
  }
}

std::vector<RetrievalRecord> load_retrieval(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<RetrievalRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto obj = json::parse(line);
      RetrievalRecord rec{obj.at("query_id").get<std::string>(), {}};
      for (const auto& s : obj.at("ranked")) {
        rec.ranked.push_back(ScoredPassage{s.at("passage_id").get<std::string>(), s.at("topic_id").get<int>(),
                                           s.at("raw_dot").get<double>(), s.at("score").get<double>()});
      }
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace topicdpr
