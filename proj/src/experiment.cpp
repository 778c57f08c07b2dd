#include "topicdpr/experiment.hpp"

#include "topicdpr/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace topicdpr {

std::vector<EvalQuery> attach_vectors(const std::vector<QueryRecord>& records, const EmbeddingMatrix& query_emb,
                                      const EmbeddingMatrix* context_emb) {
  std::vector<EvalQuery> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    auto row = query_emb.find(rec.id);
    if (!row) throw Error(ErrorCode::kMissingField, "no query vector for query \"" + rec.id + "\"");
    EvalQuery q{rec, query_emb.row(*row).transpose(), {}};
    if (context_emb) {
      auto ctx = context_emb->find(rec.id);
      if (!ctx) throw Error(ErrorCode::kMissingField, "no topic-context vector for query \"" + rec.id + "\"");
      q.topic_context = context_emb->row(*ctx).transpose();
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::set<Metric> parse_metrics(const std::string& spec, int* recall_k) {
  std::set<Metric> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    std::transform(item.begin(), item.end(), item.begin(), [](unsigned char c) { return std::tolower(c); });
    if (item.empty()) continue;
    if (item.starts_with("r@")) {
      int k = 0;
      try {
        std::size_t used = 0;
        k = std::stoi(item.substr(2), &used);
        if (used != item.size() - 2) k = 0;
      } catch (const std::exception&) {
        k = 0;
      }
      if (k < 1) throw Error(ErrorCode::kUsage, "bad recall metric \"" + item + "\"");
      if (recall_k) *recall_k = k;
      out.insert(Metric::kRecall);
    } else if (item == "p@1") {
      out.insert(Metric::kPageP1);
    } else if (item == "f1") {
      out.insert(Metric::kF1);
    } else if (item == "kilt-f1" || item == "kilt_f1") {
      out.insert(Metric::kKiltF1);
    } else {
      throw Error(ErrorCode::kUsage, "unknown metric \"" + item + "\"");
    }
  }
  return out;
}

namespace {

std::string metric_name(Metric m, int recall_k) {
  switch (m) {
    case Metric::kRecall: return "r@" + std::to_string(recall_k);
    case Metric::kPageP1: return "p@1";
    case Metric::kF1: return "f1";
    case Metric::kKiltF1: return "kilt-f1";
  }
  return "?";
}

// Whether `metric` should be computed for `q`; throws when it is explicitly
// requested but the needed gold field is absent.
bool wants(const EvalOptions& options, Metric metric, const QueryRecord& q) {
  const char* missing = nullptr;
  switch (metric) {
    case Metric::kRecall:
      if (!q.gold_passage_ids) missing = "gold_passage_ids";
      break;
    case Metric::kPageP1:
      if (!q.gold_page_id) missing = "gold_page_id";
      break;
    case Metric::kKiltF1:
      if (!q.gold_page_id) missing = "gold_page_id";
      [[fallthrough]];
    case Metric::kF1:
      if (!q.candidate_response) missing = "candidate_response";
      if (!q.reference_response) missing = "reference_response";
      break;
  }
  if (options.metrics.empty()) return missing == nullptr;
  if (!options.metrics.contains(metric)) return false;
  if (missing) {
    throw Error(ErrorCode::kMissingField, "query \"" + q.id + "\" lacks " + missing + " required by " +
                                              metric_name(metric, options.recall_k));
  }
  return true;
}

}  // namespace

EvalRun run_eval(const ShardedIndex& index, const TopicProvider& topics, const Corpus& corpus,
                 const std::vector<EvalQuery>& queries, const EvalOptions& options) {
  if (options.k < 1 || options.recall_k < 1) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (topics.num_topics() != index.num_topics()) {
    throw Error(ErrorCode::kDimensionMismatch, "topic provider yields " + std::to_string(topics.num_topics()) +
                                                   " topics but the index has " + std::to_string(index.num_topics()) +
                                                   " shards");
  }
  EvalRun run;
  run.report.k_used = options.recall_k;
  run.report.retrieval_k = options.k;
  for (const auto& q : queries) {
    validate(q.record);
    const auto w = topics.distribution(q.record.id, q.topic_input());
    auto ranked = retrieve(index, q.vector, w, options.k);
    if (options.check_oracle) {
      std::span<const double> weights(w.weights().data(), static_cast<std::size_t>(w.size()));
      if (ranked != oracle_retrieve(index, q.vector, weights, options.k)) {
        throw Error(ErrorCode::kInvalidArgument, "retrieve disagrees with oracle_retrieve on query \"" +
                                                     q.record.id + "\"");
      }
    }

    QueryMetrics m;
    m.history_length_tokens = history_length_tokens(q.record);
    std::vector<std::string> ids;
    ids.reserve(ranked.size());
    for (const auto& s : ranked) ids.push_back(s.passage_id);

    if (wants(options, Metric::kRecall, q.record)) {
      m.recall_at_k = recall_at_k(ids, *q.record.gold_passage_ids, options.recall_k);
    }
    std::optional<int> page_hit;
    if (q.record.gold_page_id) {
      page_hit = ids.empty() ? 0 : precision_at_1_page(ids.front(), *q.record.gold_page_id, corpus);
    }
    if (wants(options, Metric::kPageP1, q.record)) m.p_at_1 = page_hit;
    const bool want_kilt = wants(options, Metric::kKiltF1, q.record);
    if (wants(options, Metric::kF1, q.record) || want_kilt) {
      const double f1 = unigram_f1(*q.record.candidate_response, *q.record.reference_response);
      if (options.metrics.empty() || options.metrics.contains(Metric::kF1)) m.f1 = f1;
      if (want_kilt) m.kilt_f1 = kilt_f1(f1, *page_hit);
    }
    run.report.per_query[q.record.id] = m;
    run.retrievals.push_back({q.record.id, std::move(ranked)});
  }
  finalize(run.report);
  return run;
}

EvalRun run_eval(const ShardedIndex& index, const TopicModel& model, const Corpus& corpus,
                 const std::vector<EvalQuery>& queries, const EvalOptions& options) {
  return run_eval(index, ModelTopicProvider(model), corpus, queries, options);
}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  return std::mt19937_64(seq);
}

Vector<double> gaussian(Eigen::Index dim, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<double> v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = sigma * normal(rng);
  return v;
}

std::string padded(const char* prefix, int value, int width = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, value);
  return buf;
}

std::string vocab_word(int topic, int k) { return "t" + std::to_string(topic) + "w" + padded("", k, 2); }

std::string sample_words(int topic, int count, int vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, vocab - 1);
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += vocab_word(topic, pick(rng));
  }
  return out;
}

void check_spec(const SyntheticSpec& s) {
  if (s.true_topics < 1 || s.passages_per_topic < 1 || s.queries_per_topic < 1 || s.vocab_per_topic < 1 ||
      s.words_per_passage < 1) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic counts must all be >= 1");
  }
  if (s.dim < 2) throw Error(ErrorCode::kInvalidArgument, "synthetic dim must be >= 2");
  if (!(s.noise_sigma >= 0.0) || !(s.query_noise >= 0.0) || !(s.context_noise >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise levels must be non-negative");
  }
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  check_spec(spec);
  const int t_count = spec.true_topics;
  const Eigen::Index dim = spec.dim;

  // Unit topic directions with pairwise cosine < 0.5.
  auto centroid_rng = stream(spec.seed, 1);
  RowMatrixXd centroids(t_count, dim);
  for (int t = 0; t < t_count; ++t) {
    constexpr int kAttempts = 10000;
    int attempt = 0;
    for (; attempt < kAttempts; ++attempt) {
      Vector<double> c = gaussian(dim, 1.0, centroid_rng);
      const double norm = c.norm();
      if (norm == 0.0) continue;
      c /= norm;
      bool separated = true;
      for (int u = 0; u < t && separated; ++u) separated = centroids.row(u).dot(c) < 0.5;
      if (separated) {
        centroids.row(t) = c.transpose();
        break;
      }
    }
    if (attempt == kAttempts) {
      throw Error(ErrorCode::kInvalidArgument, "cannot place " + std::to_string(t_count) +
                                                   " topic directions with pairwise cosine < 0.5 in dim " +
                                                   std::to_string(dim));
    }
  }

  SyntheticData data;
  auto passage_rng = stream(spec.seed, 2);
  const int n = spec.passages_per_topic;
  std::vector<Passage> passages;
  std::vector<std::string> ids;
  RowMatrixXf vectors(static_cast<Eigen::Index>(t_count) * n, dim);
  for (int t = 0; t < t_count; ++t) {
    for (int i = 0; i < n; ++i) {
      const int row = t * n + i;
      Vector<double> v;
      do {
        v = centroids.row(t).transpose() + gaussian(dim, spec.noise_sigma, passage_rng);
      } while (v.norm() == 0.0);
      vectors.row(row) = (v / v.norm()).cast<float>().transpose();
      Passage p{padded("p", row, 5), "t" + std::to_string(t) + "-" + padded("pg", i / kSyntheticPageSize, 3),
                sample_words(t, spec.words_per_passage, spec.vocab_per_topic, passage_rng)};
      ids.push_back(p.id);
      data.planted[p.id] = t;
      passages.push_back(std::move(p));
    }
  }
  data.corpus = Corpus(std::move(passages));
  data.passages = EmbeddingMatrix(ids, vectors);

  auto word_rng = stream(spec.seed, 3);
  std::vector<std::string> words;
  RowMatrixXf word_vecs(static_cast<Eigen::Index>(t_count) * spec.vocab_per_topic, dim);
  for (int t = 0; t < t_count; ++t) {
    for (int k = 0; k < spec.vocab_per_topic; ++k) {
      Vector<double> v = centroids.row(t).transpose() + gaussian(dim, spec.noise_sigma, word_rng);
      word_vecs.row(static_cast<Eigen::Index>(words.size())) = (v / v.norm()).cast<float>().transpose();
      words.push_back(vocab_word(t, k));
    }
  }
  data.word_vectors = EmbeddingMatrix(std::move(words), std::move(word_vecs));

  auto make_queries = [&](const char* prefix, std::uint32_t stream_id) {
    auto rng = stream(spec.seed, stream_id);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<EvalQuery> out;
    for (int t = 0; t < t_count; ++t) {
      for (int j = 0; j < spec.queries_per_topic; ++j) {
        const int row = t * n + pick(rng);
        const auto& gold = data.corpus.passages()[static_cast<std::size_t>(row)];
        EvalQuery q;
        q.record.id = padded(prefix, static_cast<int>(out.size()));
        q.record.turns = {{"user", sample_words(t, 6, spec.vocab_per_topic, rng)},
                          {"agent", sample_words(t, 6, spec.vocab_per_topic, rng)},
                          {"user", sample_words(t, 6, spec.vocab_per_topic, rng)}};
        q.record.gold_page_id = gold.page_id;
        q.record.gold_passage_ids = std::vector<std::string>{gold.id};
        q.record.reference_response = gold.text;
        q.record.candidate_response = sample_words(t, spec.words_per_passage, spec.vocab_per_topic, rng);
        q.vector = (vectors.row(row).cast<double>().transpose() + gaussian(dim, spec.query_noise, rng)).cast<float>();
        q.topic_context =
            (centroids.row(t).transpose() + gaussian(dim, spec.context_noise, rng)).cast<float>();
        out.push_back(std::move(q));
      }
    }
    return out;
  };
  data.validation = make_queries("val", 4);
  data.test = make_queries("test", 5);
  data.centroids = centroids.cast<float>();
  return data;
}

int choose_t(const std::map<int, SweepRow>& per_t) {
  if (per_t.empty()) throw Error(ErrorCode::kInvalidArgument, "empty sweep");
  int best = per_t.begin()->first;
  double best_r = per_t.begin()->second.validation_r_at_k;
  for (const auto& [t, row] : per_t) {
    if (row.validation_r_at_k > best_r) {
      best = t;
      best_r = row.validation_r_at_k;
    }
  }
  return best;
}

SweepResult sweep_t(const Corpus& corpus, const EmbeddingMatrix& train_emb, const std::vector<EvalQuery>& validation,
                    const std::vector<EvalQuery>& test, int t_min, int t_max, const SweepConfig& config,
                    const WordVectors* word_vectors) {
  if (t_min < 1 || t_min > t_max || t_max > train_emb.count()) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= t_min <= t_max <= " + std::to_string(train_emb.count()));
  }
  const std::string recall_key = "r@" + std::to_string(config.recall_k);
  EvalOptions options;
  options.k = config.k;
  options.recall_k = config.recall_k;
  options.metrics = {Metric::kRecall};

  SweepResult result;
  for (int t = t_min; t <= t_max; ++t) {
    const auto model = train_topics(train_emb, t, config.train);
    const auto assignment = assign_all(model, train_emb);
    const auto index = build_index(corpus, split_by_assignment(train_emb, assignment, t));

    SweepRow row;
    options.check_oracle = config.check_oracle;
    row.validation_r_at_k = run_eval(index, model, corpus, validation, options).report.aggregate.at(recall_key);
    options.check_oracle = false;
    row.test_r_at_k = test.empty() ? 0.0 : run_eval(index, model, corpus, test, options).report.aggregate.at(recall_key);
    if (word_vectors) {
      try {
        row.coherence = topic_coherence(top_words(t, corpus, assignment, config.top_words), *word_vectors);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateInput) throw;
      }
    }
    result.per_t.emplace(t, row);
  }
  result.chosen_t = choose_t(result.per_t);
  return result;
}

}  // namespace topicdpr
