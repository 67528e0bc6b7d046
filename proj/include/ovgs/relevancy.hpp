#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ovgs/embedding.hpp"

namespace ovgs {

class Embedder;

inline constexpr std::size_t kDefaultTopK = 5;

// Two-way softmax of the query against each canonical phrase, minimized over
// the phrases:
//   min_c exp(o.q) / (exp(o.q) + exp(o.c)) = sigmoid(o.q - max_c o.c)
// Evaluated in double. Throws InputError on empty canon or a dim mismatch.
double pairwise_relevancy(std::span<const float> object, std::span<const float> query,
                          std::span<const Embedding> canon);

// Same score from precomputed dot products.
double relevancy_from_dots(double query_dot, std::span<const double> canon_dots);

double stable_sigmoid(double x);

// Mean of the min(k, n) largest scores.
double top_k_mean(std::vector<double> scores, std::size_t k);

// Per-object score: mean of the top-k pairwise scores of the bag.
double object_relevancy(const EmbeddingBag& bag, std::span<const float> query,
                        std::span<const Embedding> canon, std::size_t k);

struct SelectionRule {
  enum class Kind { kTop1, kTopN, kThreshold };

  Kind kind = Kind::kTop1;
  std::size_t n = 1;
  double tau = 0.5;

  static SelectionRule top1() { return {}; }
  static SelectionRule top_n(std::size_t n);
  static SelectionRule threshold(double tau);
  // "top1", "top_n:<n>", "threshold:<tau>".
  static SelectionRule parse(std::string_view text);
  std::string to_string() const;
  void validate() const;

  bool operator==(const SelectionRule&) const = default;
};

struct RankedObject {
  std::int32_t object_id = 0;
  double score = 0.0;

  bool operator==(const RankedObject&) const = default;
};

struct QueryResult {
  std::string query_text;
  std::vector<RankedObject> ranked;  // score descending, ties by ascending id
  std::vector<std::int32_t> selected;
  std::size_t k_used = kDefaultTopK;
  SelectionRule rule;
};

// Scores every bag against `query_emb`, ranks, and applies `rule`.
QueryResult rank_with_embedding(const EmbeddingBank& bank, std::string query_text,
                                std::span<const float> query_emb, std::size_t k,
                                const SelectionRule& rule = SelectionRule::top1());

QueryResult rank_objects(const EmbeddingBank& bank, std::string_view query_text,
                         const Embedder& embedder, std::size_t k = kDefaultTopK,
                         const SelectionRule& rule = SelectionRule::top1());

std::vector<std::int32_t> select_objects(const QueryResult& result, const SelectionRule& rule);

nlohmann::json to_json(const QueryResult& result);

}  // namespace ovgs
