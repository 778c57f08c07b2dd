#pragma once

#include "topicdpr/types.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace topicdpr {

/// |gold ∩ retrieved[0, k)| / |gold|. Throws on empty gold or k < 1.
double recall_at_k(std::span<const std::string> retrieved, std::span<const std::string> gold, int k);

/// 1 iff the top-1 passage lies on the gold page.
int precision_at_1_page(const std::string& top1_passage_id, const std::string& gold_page_id,
                        const Corpus& corpus);

/// Multiset unigram overlap F1 over text::tokenize tokens.
double unigram_f1(std::string_view candidate, std::string_view reference);

/// f1 gated by top-1 page correctness.
double kilt_f1(double f1, int page_hit);

struct PearsonResult {
  double r = 0.0;
  /// Two-tailed, from t = r * sqrt((n-2)/(1-r^2)) with n-2 dof. NaN when n = 2.
  double p_value = 0.0;
};

PearsonResult pearson(std::span<const std::pair<double, double>> pairs);

struct QueryMetrics {
  std::optional<double> recall_at_k;
  std::optional<int> p_at_1;
  std::optional<double> f1;
  std::optional<double> kilt_f1;
  std::size_t history_length_tokens = 0;
};

struct EvalReport {
  std::map<std::string, QueryMetrics> per_query;
  /// Means of every field defined for at least one query.
  std::map<std::string, double> aggregate;
  int k_used = 5;       // recall cutoff
  int retrieval_k = 10;  // depth retrieved per query
  std::optional<PearsonResult> pearson_length_f1;
};

/// Fills `aggregate` and `pearson_length_f1` from `per_query`.
void finalize(EvalReport& report);

/// Token count of all turn texts, using the F1 tokenizer.
std::size_t history_length_tokens(const QueryRecord& query);

}  // namespace topicdpr
