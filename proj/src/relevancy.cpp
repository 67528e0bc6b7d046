#include "ovgs/relevancy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "ovgs/embedder.hpp"
#include "ovgs/error.hpp"

namespace ovgs {
namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

}  // namespace

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double relevancy_from_dots(double query_dot, std::span<const double> canon_dots) {
  if (canon_dots.empty()) throw InputError("relevancy needs at least one canonical embedding");
  // The two-way softmax is decreasing in the canonical dot, so the minimum
  // over canonicals is attained at the largest one.
  const double worst = *std::max_element(canon_dots.begin(), canon_dots.end());
  return stable_sigmoid(query_dot - worst);
}

double pairwise_relevancy(std::span<const float> object, std::span<const float> query,
                          std::span<const Embedding> canon) {
  if (canon.empty()) throw InputError("relevancy needs at least one canonical embedding");
  if (query.size() != object.size())
    throw InputError("relevancy: query dim " + std::to_string(query.size()) +
                     " != object dim " + std::to_string(object.size()));
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : canon) {
    if (c.size() != object.size()) throw InputError("relevancy: canonical dim mismatch");
    worst = std::max(worst, dot(object, c));
  }
  return stable_sigmoid(dot(object, query) - worst);
}

double top_k_mean(std::vector<double> scores, std::size_t k) {
  if (scores.empty()) throw InputError("top-k mean of an empty score list");
  if (k < 1) throw InputError("k must be at least 1");
  const std::size_t used = std::min(k, scores.size());
  std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(used), scores.end(),
                    std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < used; ++i) sum += scores[i];
  return sum / static_cast<double>(used);
}

double object_relevancy(const EmbeddingBag& bag, std::span<const float> query,
                        std::span<const Embedding> canon, std::size_t k) {
  if (bag.entries.empty())
    throw InputError("object " + std::to_string(bag.object_id) + " has an empty bag");
  std::vector<double> scores;
  scores.reserve(bag.entries.size());
  for (const auto& e : bag.entries) scores.push_back(pairwise_relevancy(e.embedding, query, canon));
  return top_k_mean(std::move(scores), k);
}

SelectionRule SelectionRule::top_n(std::size_t n) {
  SelectionRule r{Kind::kTopN, n, 0.5};
  r.validate();
  return r;
}

SelectionRule SelectionRule::threshold(double tau) {
  SelectionRule r{Kind::kThreshold, 1, tau};
  r.validate();
  return r;
}

void SelectionRule::validate() const {
  if (kind == Kind::kTopN && n < 1) throw InputError("top_n rule needs n >= 1");
  if (kind == Kind::kThreshold && !(tau > 0.0 && tau < 1.0))
    throw InputError("threshold rule needs tau in (0, 1)");
}

SelectionRule SelectionRule::parse(std::string_view text) {
  if (text == "top1") return top1();
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string arg(colon == std::string_view::npos ? "" : text.substr(colon + 1));
  try {
    std::size_t used = 0;
    if (head == "top_n" && !arg.empty()) {
      const long long n = std::stoll(arg, &used);
      if (used == arg.size()) {
        if (n < 1) throw InputError("top_n rule needs n >= 1");
        return top_n(static_cast<std::size_t>(n));
      }
    } else if (head == "threshold" && !arg.empty()) {
      const double tau = std::stod(arg, &used);
      if (used == arg.size()) return threshold(tau);
    }
  } catch (const std::logic_error&) {
  }
  throw InputError("unknown selection rule '" + std::string(text) +
                   "' (expected top1, top_n:<n> or threshold:<tau>)");
}

std::string SelectionRule::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kTop1:
      return "top1";
    case Kind::kTopN:
      os << "top_n:" << n;
      break;
    case Kind::kThreshold: {
      // Shortest form that parses back to the same double.
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, tau);
      os << "threshold:" << std::string_view(buf, res.ptr - buf);
      break;
    }
  }
  return os.str();
}

std::vector<std::int32_t> select_objects(const QueryResult& result, const SelectionRule& rule) {
  rule.validate();
  if (result.ranked.empty()) throw InputError("cannot select from an empty ranking");
  std::vector<std::int32_t> out;
  switch (rule.kind) {
    case SelectionRule::Kind::kTop1:
      out.push_back(result.ranked.front().object_id);
      break;
    case SelectionRule::Kind::kTopN:
      for (std::size_t i = 0; i < std::min(rule.n, result.ranked.size()); ++i)
        out.push_back(result.ranked[i].object_id);
      break;
    case SelectionRule::Kind::kThreshold:
      for (const auto& r : result.ranked)
        if (r.score >= rule.tau) out.push_back(r.object_id);
      break;
  }
  return out;
}

QueryResult rank_with_embedding(const EmbeddingBank& bank, std::string query_text,
                                std::span<const float> query_emb, std::size_t k,
                                const SelectionRule& rule) {
  if (bank.bags.empty()) throw InputError("embedding bank has no objects");
  if (k < 1) throw InputError("k must be at least 1");
  rule.validate();
  if (query_emb.size() != bank.dim)
    throw InputError("query embedding dim " + std::to_string(query_emb.size()) +
                     " != bank dim " + std::to_string(bank.dim));

  const auto canon = bank.canonical_vectors();
  QueryResult result;
  result.query_text = std::move(query_text);
  result.k_used = k;
  result.rule = rule;
  result.ranked.reserve(bank.bags.size());
  for (const auto& [id, bag] : bank.bags)
    result.ranked.push_back({id, object_relevancy(bag, query_emb, canon, k)});
  std::sort(result.ranked.begin(), result.ranked.end(),
            [](const RankedObject& a, const RankedObject& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.object_id < b.object_id;
            });
  result.selected = select_objects(result, rule);
  return result;
}

QueryResult rank_objects(const EmbeddingBank& bank, std::string_view query_text,
                         const Embedder& embedder, std::size_t k, const SelectionRule& rule) {
  Embedding q;
  try {
    q = normalized(embedder.embed_text(query_text));
  } catch (const std::exception& e) {
    throw InputError("embedding query '" + std::string(query_text) + "' failed: " + e.what());
  }
  return rank_with_embedding(bank, std::string(query_text), q, k, rule);
}

nlohmann::json to_json(const QueryResult& result) {
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& r : result.ranked) ranked.push_back({{"object_id", r.object_id}, {"score", r.score}});
  return {{"query", result.query_text},
          {"k", result.k_used},
          {"rule", result.rule.to_string()},
          {"ranked", ranked},
          {"selected", result.selected}};
}

}  // namespace ovgs
