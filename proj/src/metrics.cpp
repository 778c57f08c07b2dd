#include "topicdpr/metrics.hpp"

#include "topicdpr/error.hpp"
#include "topicdpr/text.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace topicdpr {

double recall_at_k(std::span<const std::string> retrieved, std::span<const std::string> gold, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  std::unordered_set<std::string_view> gold_set(gold.begin(), gold.end());
  if (gold_set.empty()) throw Error(ErrorCode::kInvalidArgument, "gold passage set is empty");
  const auto depth = std::min(retrieved.size(), static_cast<std::size_t>(k));
  std::unordered_set<std::string_view> hits;
  for (std::size_t i = 0; i < depth; ++i) {
    if (gold_set.contains(retrieved[i])) hits.insert(retrieved[i]);
  }
  return static_cast<double>(hits.size()) / static_cast<double>(gold_set.size());
}

int precision_at_1_page(const std::string& top1_passage_id, const std::string& gold_page_id, const Corpus& corpus) {
  return corpus.page_of(top1_passage_id) == gold_page_id ? 1 : 0;
}

double unigram_f1(std::string_view candidate, std::string_view reference) {
  const auto cand = text::tokenize(candidate);
  const auto ref = text::tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  std::unordered_map<std::string, int> ref_counts;
  for (const auto& t : ref) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : cand) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

double kilt_f1(double f1, int page_hit) {
  if (!(f1 >= 0.0 && f1 <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "f1 must lie in [0, 1]");
  if (page_hit != 0 && page_hit != 1) throw Error(ErrorCode::kInvalidArgument, "page_hit must be 0 or 1");
  return page_hit == 1 ? f1 : 0.0;
}

PearsonResult pearson(std::span<const std::pair<double, double>> pairs) {
  const auto n = pairs.size();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "Pearson correlation needs at least 2 pairs");
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : pairs) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& [x, y] : pairs) {
    sxy += (x - mean_x) * (y - mean_y);
    sxx += (x - mean_x) * (x - mean_x);
    syy += (y - mean_y) * (y - mean_y);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kDegenerateInput, "zero variance in Pearson input");
  PearsonResult out;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (n == 2) {
    out.p_value = std::numeric_limits<double>::quiet_NaN();
  } else if (std::abs(out.r) == 1.0) {
    out.p_value = 0.0;
  } else {
    const double dof = static_cast<double>(n - 2);
    const double t = out.r * std::sqrt(dof / (1.0 - out.r * out.r));
    boost::math::students_t dist(dof);
    out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return out;
}

std::size_t history_length_tokens(const QueryRecord& query) {
  std::size_t total = 0;
  for (const auto& turn : query.turns) total += text::tokenize(turn.text).size();
  return total;
}

void finalize(EvalReport& report) {
  struct Mean {
    double sum = 0.0;
    std::size_t n = 0;
    void add(double v) {
      sum += v;
      ++n;
    }
  };
  Mean recall, p1, f1, kilt;
  std::vector<std::pair<double, double>> length_f1;
  for (const auto& [_, m] : report.per_query) {
    if (m.recall_at_k) recall.add(*m.recall_at_k);
    if (m.p_at_1) p1.add(*m.p_at_1);
    if (m.f1) {
      f1.add(*m.f1);
      length_f1.emplace_back(static_cast<double>(m.history_length_tokens), *m.f1);
    }
    if (m.kilt_f1) kilt.add(*m.kilt_f1);
  }
  report.aggregate.clear();
  auto put = [&](const std::string& key, const Mean& m) {
    if (m.n > 0) report.aggregate[key] = m.sum / static_cast<double>(m.n);
  };
  put("r@" + std::to_string(report.k_used), recall);
  put("p@1", p1);
  put("f1", f1);
  put("kilt_f1", kilt);

  report.pearson_length_f1.reset();
  try {
    if (length_f1.size() >= 2) report.pearson_length_f1 = pearson(length_f1);
  } catch (const Error&) {
    // zero variance: the correlation is undefined and simply not reported
  }
}

}  // namespace topicdpr
