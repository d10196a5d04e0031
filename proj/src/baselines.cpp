#include "compselect/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "compselect/error.hpp"

namespace compselect {

Bm25Index::Bm25Index(const SentencePool& pool, Bm25Params params) : params_(params) {
  if (pool.empty()) throw PreconditionError("BM25 needs a non-empty pool");
  if (!(params.k1 > 0.0) || params.b < 0.0 || params.b > 1.0) {
    throw PreconditionError("BM25 parameters need k1 > 0 and b in [0, 1]");
  }
  std::map<std::string, std::size_t> df;
  std::size_t total = 0;
  for (const auto& s : pool.sentences) {
    docs_.push_back(tokenize(s.text, TokenMode::metric));
    total += docs_.back().size();
    for (const auto& t : std::set<std::string>(docs_.back().begin(), docs_.back().end())) ++df[t];
  }
  df_.assign(df.begin(), df.end());
  avg_len_ = static_cast<double>(total) / static_cast<double>(pool.size());
}

double Bm25Index::score(std::string_view query, std::size_t pool_index) const {
  if (avg_len_ == 0.0) return 0.0;
  const auto& doc = docs_.at(pool_index);
  const auto terms = tokenize(query, TokenMode::metric);
  const double n = static_cast<double>(docs_.size());
  const double len_norm = 1.0 - params_.b + params_.b * static_cast<double>(doc.size()) / avg_len_;
  double total = 0.0;
  for (const auto& term : std::set<std::string>(terms.begin(), terms.end())) {
    const auto tf = static_cast<double>(std::count(doc.begin(), doc.end(), term));
    if (tf == 0.0) continue;
    auto it = std::lower_bound(df_.begin(), df_.end(), term,
                               [](const auto& e, const std::string& t) { return e.first < t; });
    const double df = static_cast<double>(it->second);
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    total += idf * tf * (params_.k1 + 1.0) / (tf + params_.k1 * len_norm);
  }
  return total;
}

double bm25_score(std::string_view query, const Sentence& sentence, const SentencePool& pool,
                  const Bm25Params& params) {
  const Bm25Index index(pool, params);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].doc_index == sentence.doc_index && pool[i].sent_index == sentence.sent_index) {
      return index.score(query, i);
    }
  }
  throw PreconditionError("sentence is not part of the pool");
}

ClueSet bm25_rerank(std::string_view query, const SentencePool& pool, const Bm25Params& params,
                    std::size_t top_k) {
  if (top_k == 0) throw PreconditionError("top_k must be >= 1");
  ClueSet out;
  out.stage = ClueStage::reranked;
  if (pool.empty()) return out;
  const Bm25Index index(pool, params);
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < pool.size(); ++i) scored.emplace_back(index.score(query, i), i);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; i < std::min(top_k, scored.size()); ++i) out.clues.push_back(scored[i].second);
  return out;
}

std::vector<std::string> full_content(const QaSample& sample) {
  std::vector<std::string> out;
  out.reserve(sample.docs.size());
  for (const auto& d : sample.docs) out.push_back(d.text);
  return out;
}

}  // namespace compselect
