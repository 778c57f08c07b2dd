#include "topicdpr/topic_model.hpp"

#include "topicdpr/binary_io.hpp"
#include "topicdpr/error.hpp"
#include "topicdpr/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <unordered_map>

namespace topicdpr {

namespace {

double dot_seq(const float* a, const float* b, Eigen::Index n) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

double norm_seq(const float* a, Eigen::Index n) { return std::sqrt(dot_seq(a, a, n)); }

Eigen::Index argmax_lowest(const Vector<double>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

struct Clustering {
  RowMatrixXd centroids;
  double objective = -std::numeric_limits<double>::infinity();
};

// Unit rows of `x`; the caller has already rejected zero-norm rows.
RowMatrixXd unit_rows(const RowMatrixXf& x) {
  RowMatrixXd out = x.cast<double>();
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= out.row(r).norm();
  return out;
}

Eigen::Index count_distinct_rows(const RowMatrixXd& x) {
  std::set<std::vector<double>> seen;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    seen.emplace(x.row(r).data(), x.row(r).data() + x.cols());
  }
  return static_cast<Eigen::Index>(seen.size());
}

// k-means++ on the sphere: squared chord distance between unit vectors is
// 2(1 - cos), so sampling proportional to (1 - max cos) is D^2 sampling.
RowMatrixXd seed_centroids(const RowMatrixXd& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  RowMatrixXd centroids(k, x.cols());
  std::vector<Eigen::Index> chosen;
  chosen.push_back(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  centroids.row(0) = x.row(chosen[0]);
  Vector<double> gap = (Vector<double>::Ones(n) - x * centroids.row(0).transpose()).cwiseMax(0.0);
  for (int c = 1; c < k; ++c) {
    const double total = gap.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double cumulative = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += gap[i];
        if (gap[i] > 0.0 && cumulative > u) {
          pick = i;
          break;
        }
      }
      // u can land on the final boundary through rounding
      if (pick < 0) {
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (gap[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    }
    if (pick < 0) {
      // Every remaining gap rounded to zero: take the first row that is not
      // bitwise equal to a chosen centroid.
      for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
        bool fresh = std::none_of(chosen.begin(), chosen.end(), [&](Eigen::Index j) { return x.row(i) == x.row(j); });
        if (fresh) pick = i;
      }
    }
    chosen.push_back(pick);
    centroids.row(c) = x.row(pick);
    gap = gap.cwiseMin((Vector<double>::Ones(n) - x * centroids.row(c).transpose()).cwiseMax(0.0));
  }
  return centroids;
}

Clustering lloyd(const RowMatrixXd& x, RowMatrixXd centroids, const TrainConfig& config) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centroids.rows();
  std::vector<Eigen::Index> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    RowMatrixXd sims = x * centroids.transpose();
    Eigen::Index changed = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = argmax_lowest(sims.row(i).transpose());
      if (best != labels[static_cast<std::size_t>(i)]) ++changed;
      labels[static_cast<std::size_t>(i)] = best;
    }
    RowMatrixXd sums = RowMatrixXd::Zero(k, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (Eigen::Index c = 0; c < k; ++c) {
      const double norm = sums.row(c).norm();
      // An emptied (or cancelled-out) cluster keeps its previous centroid.
      if (norm > 0.0) centroids.row(c) = sums.row(c) / norm;
    }
    if (static_cast<double>(changed) / static_cast<double>(n) < config.tolerance) break;
  }
  Clustering out;
  out.objective = (x * centroids.transpose()).rowwise().maxCoeff().sum();
  out.centroids = std::move(centroids);
  return out;
}

}  // namespace

TopicDistribution::TopicDistribution(Vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw Error(ErrorCode::kInvalidArgument, "topic distribution is empty");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "topic weight " + std::to_string(i) + " is negative or non-finite");
    }
    sum += weights_[i];
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorCode::kInvalidArgument, "topic weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

Eigen::Index TopicDistribution::argmax() const { return argmax_lowest(weights_); }

TopicModel::TopicModel(RowMatrixXf centroids, float temperature, std::size_t trained_on)
    : centroids_(std::move(centroids)), temperature_(temperature), trained_on_(trained_on) {
  if (centroids_.rows() < 1 || centroids_.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "topic model needs at least one centroid of positive dim");
  }
  if (!(temperature_ > 0.0f) || !std::isfinite(temperature_)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive and finite");
  }
  centroid_norms_.resize(centroids_.rows());
  for (Eigen::Index r = 0; r < centroids_.rows(); ++r) {
    if (!centroids_.row(r).allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "centroid " + std::to_string(r) + " is not finite");
    }
    centroid_norms_[r] = norm_seq(centroids_.row(r).data(), centroids_.cols());
    if (centroid_norms_[r] == 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "centroid " + std::to_string(r) + " has zero norm");
    }
  }
}

TopicModel train_topics(const EmbeddingMatrix& emb, int num_topics, const TrainConfig& config) {
  if (num_topics < 1) throw Error(ErrorCode::kInvalidArgument, "number of topics must be >= 1");
  if (num_topics > emb.count()) {
    throw Error(ErrorCode::kInvalidArgument, "number of topics " + std::to_string(num_topics) +
                                                 " exceeds vector count " + std::to_string(emb.count()));
  }
  if (config.max_iters < 1 || config.restarts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_iters and restarts must be >= 1");
  }
  for (Eigen::Index r = 0; r < emb.count(); ++r) {
    if (norm_seq(emb.row(r).data(), emb.dim()) == 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "vector \"" + emb.ids()[static_cast<std::size_t>(r)] +
                                                   "\" has zero norm");
    }
  }
  const RowMatrixXd x = unit_rows(emb.vectors());
  if (count_distinct_rows(x) < num_topics) {
    throw Error(ErrorCode::kDegenerateInput, "fewer distinct directions than T");
  }

  std::mt19937_64 rng(config.seed);
  Clustering best;
  for (int r = 0; r < config.restarts; ++r) {
    Clustering run = lloyd(x, seed_centroids(x, num_topics, rng), config);
    if (run.objective > best.objective) best = std::move(run);
  }
  return TopicModel(best.centroids.cast<float>(), static_cast<float>(config.temperature),
                    static_cast<std::size_t>(emb.count()));
}

TopicDistribution infer_distribution(const TopicModel& model, const Eigen::Ref<const Vector<float>>& vector) {
  if (vector.size() != model.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector dim " + std::to_string(vector.size()) +
                                                   " does not match model dim " + std::to_string(model.dim()));
  }
  Vector<float> x = vector;  // contiguous copy
  const double x_norm = norm_seq(x.data(), x.size());
  if (!std::isfinite(x_norm)) throw Error(ErrorCode::kInvalidArgument, "vector is not finite");
  if (x_norm == 0.0) throw Error(ErrorCode::kInvalidArgument, "vector has zero norm");

  const auto t = model.num_topics();
  const double tau = model.temperature();
  Vector<double> logits(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    const double cosine = dot_seq(model.centroids().row(i).data(), x.data(), x.size()) /
                          (model.centroid_norms()[i] * x_norm);
    logits[i] = cosine / tau;
  }
  Vector<double> w = (logits.array() - logits.maxCoeff()).exp();
  w /= w.sum();
  return TopicDistribution(std::move(w));
}

int assign_cluster(const TopicModel& model, const Eigen::Ref<const Vector<float>>& vector) {
  return static_cast<int>(infer_distribution(model, vector).argmax());
}

TopicAssignment assign_all(const TopicModel& model, const EmbeddingMatrix& emb) {
  TopicAssignment out;
  for (Eigen::Index r = 0; r < emb.count(); ++r) {
    out[emb.ids()[static_cast<std::size_t>(r)]] = assign_cluster(model, emb.row(r).transpose());
  }
  return out;
}

std::vector<std::vector<std::string>> top_words(int num_topics, const Corpus& corpus,
                                                const TopicAssignment& assignment, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "N must be >= 1");
  if (num_topics < 1) throw Error(ErrorCode::kInvalidArgument, "number of topics must be >= 1");
  for (const auto& [id, topic] : assignment) {
    if (!corpus.contains(id)) throw Error(ErrorCode::kUnknownId, "assignment names unknown passage \"" + id + "\"");
    if (topic < 0 || topic >= num_topics) {
      throw Error(ErrorCode::kInvalidArgument, "passage \"" + id + "\" assigned to out-of-range topic " +
                                                   std::to_string(topic));
    }
  }

  std::vector<std::unordered_map<std::string, std::size_t>> tf(static_cast<std::size_t>(num_topics));
  for (const auto& p : corpus.passages()) {
    auto it = assignment.find(p.id);
    if (it == assignment.end()) throw Error(ErrorCode::kMissingField, "passage \"" + p.id + "\" is unassigned");
    auto& counts = tf[static_cast<std::size_t>(it->second)];
    for (auto& token : text::tokenize(p.text)) {
      if (!text::is_stopword(token)) ++counts[std::move(token)];
    }
  }
  std::unordered_map<std::string, int> df;
  for (const auto& counts : tf) {
    for (const auto& [term, _] : counts) ++df[term];
  }

  std::vector<std::vector<std::string>> out;
  out.reserve(tf.size());
  for (const auto& counts : tf) {
    std::vector<std::pair<double, std::string>> scored;
    scored.reserve(counts.size());
    for (const auto& [term, count] : counts) {
      const double idf = std::log(static_cast<double>(num_topics) / static_cast<double>(df.at(term)));
      scored.emplace_back(static_cast<double>(count) * idf, term);
    }
    const auto keep = std::min(scored.size(), static_cast<std::size_t>(n));
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    std::vector<std::string> words;
    for (std::size_t i = 0; i < keep; ++i) words.push_back(std::move(scored[i].second));
    out.push_back(std::move(words));
  }
  return out;
}

std::vector<std::vector<std::string>> top_words(const TopicModel& model, const Corpus& corpus,
                                                const TopicAssignment& assignment, int n) {
  return top_words(static_cast<int>(model.num_topics()), corpus, assignment, n);
}

WordVectors word_vectors_from(const EmbeddingMatrix& emb) {
  WordVectors out;
  for (Eigen::Index r = 0; r < emb.count(); ++r) out.emplace(emb.ids()[static_cast<std::size_t>(r)], emb.row(r).transpose());
  return out;
}

double topic_coherence(const std::vector<std::vector<std::string>>& topics, const WordVectors& word_vectors) {
  double total = 0.0;
  int scored_topics = 0;
  for (const auto& words : topics) {
    std::vector<const Vector<float>*> covered;
    for (const auto& w : words) {
      auto it = word_vectors.find(w);
      if (it != word_vectors.end() && norm_seq(it->second.data(), it->second.size()) > 0.0) {
        covered.push_back(&it->second);
      }
    }
    if (covered.size() < 2) continue;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < covered.size(); ++i) {
      for (std::size_t j = i + 1; j < covered.size(); ++j) {
        const auto& a = *covered[i];
        const auto& b = *covered[j];
        if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "word vectors differ in dim");
        sum += dot_seq(a.data(), b.data(), a.size()) / (norm_seq(a.data(), a.size()) * norm_seq(b.data(), b.size()));
        ++pairs;
      }
    }
    total += sum / static_cast<double>(pairs);
    ++scored_topics;
  }
  if (scored_topics == 0) {
    throw Error(ErrorCode::kDegenerateInput, "no topic has at least two words with vectors");
  }
  return total / scored_topics;
}

namespace {
constexpr char kModelMagic[4] = {'T', 'P', 'M', '1'};
}

void save_model(const std::filesystem::path& path, const TopicModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(kModelMagic, 4);
  binary::write_le(out, static_cast<std::uint32_t>(model.num_topics()));
  binary::write_le(out, static_cast<std::uint32_t>(model.dim()));
  binary::write_le(out, model.temperature());
  for (Eigen::Index r = 0; r < model.num_topics(); ++r) {
    for (Eigen::Index c = 0; c < model.dim(); ++c) binary::write_le(out, model.centroids()(r, c));
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

TopicModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kModelMagic)) {
    throw Error(ErrorCode::kFormat, "bad magic: expected \"TPM1\"");
  }
  std::uint32_t t = 0, dim = 0;
  float temperature = 0.0f;
  if (!binary::read_le(in, t) || !binary::read_le(in, dim) || !binary::read_le(in, temperature)) {
    throw Error(ErrorCode::kFormat, "unexpected end of file in model header");
  }
  if (t == 0 || dim == 0) throw Error(ErrorCode::kFormat, "model T and dim must be positive");
  RowMatrixXf centroids(t, dim);
  for (std::uint32_t r = 0; r < t; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c) {
      if (!binary::read_le(in, centroids(r, c))) {
        throw Error(ErrorCode::kFormat, "unexpected end of file after centroid " + std::to_string(r));
      }
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::kFormat, "trailing bytes after centroids");
  return TopicModel(std::move(centroids), temperature);
}

TopicDistribution ModelTopicProvider::distribution(std::string_view,
                                                   const Eigen::Ref<const Vector<float>>& topic_input) const {
  return infer_distribution(model_, topic_input);
}

ExternalTopicProvider::ExternalTopicProvider(std::map<std::string, TopicDistribution, std::less<>> distributions)
    : distributions_(std::move(distributions)) {
  if (distributions_.empty()) throw Error(ErrorCode::kInvalidArgument, "no external distributions");
  num_topics_ = distributions_.begin()->second.size();
  for (const auto& [id, d] : distributions_) {
    if (d.size() != num_topics_) {
      throw Error(ErrorCode::kDimensionMismatch, "distribution for \"" + id + "\" has " + std::to_string(d.size()) +
                                                     " weights, expected " + std::to_string(num_topics_));
    }
  }
}

TopicDistribution ExternalTopicProvider::distribution(std::string_view query_id,
                                                      const Eigen::Ref<const Vector<float>>&) const {
  auto it = distributions_.find(query_id);
  if (it == distributions_.end()) {
    throw Error(ErrorCode::kUnknownId, "no external distribution for query \"" + std::string(query_id) + "\"");
  }
  return it->second;
}

ExternalTopicProvider load_distributions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::map<std::string, TopicDistribution, std::less<>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(number) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kFormat, where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() || !obj.contains("weights") ||
        !obj["weights"].is_array()) {
      throw Error(ErrorCode::kFormat, where + "expected {\"id\": str, \"weights\": [float]}");
    }
    const auto& weights = obj["weights"];
    Vector<double> w(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!weights[i].is_number()) throw Error(ErrorCode::kFormat, where + "weights must be numbers");
      w[static_cast<Eigen::Index>(i)] = weights[i].get<double>();
    }
    auto id = obj["id"].get<std::string>();
    try {
      if (!out.emplace(id, TopicDistribution(std::move(w))).second) {
        throw Error(ErrorCode::kDuplicateId, where + "duplicate id \"" + id + "\"");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDuplicateId) throw;
      throw Error(e.code(), where + e.what());
    }
  }
  return ExternalTopicProvider(std::move(out));
}

}  // namespace topicdpr
