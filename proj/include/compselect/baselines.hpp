#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "compselect/clues.hpp"
#include "compselect/corpus.hpp"

namespace compselect {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi BM25 over one sample's sentence pool, tokens in metric mode.
/// Precomputes document frequencies so scoring many sentences is cheap.
class Bm25Index {
 public:
  Bm25Index(const SentencePool& pool, Bm25Params params = {});

  /// Sum over distinct query terms t of
  ///   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg_len)),
  /// idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1).
  double score(std::string_view query, std::size_t pool_index) const;

 private:
  Bm25Params params_;
  std::vector<std::vector<std::string>> docs_;
  std::vector<std::pair<std::string, std::size_t>> df_;  // sorted by term
  double avg_len_ = 0.0;
};

double bm25_score(std::string_view query, const Sentence& sentence, const SentencePool& pool,
                  const Bm25Params& params = {});

/// Top `top_k` pool sentences by BM25, ties by pool order.
ClueSet bm25_rerank(std::string_view query, const SentencePool& pool, const Bm25Params& params,
                    std::size_t top_k);

/// Document texts in retrieval order, unmodified.
std::vector<std::string> full_content(const QaSample& sample);

/// Naive generation uses no context at all.
inline std::vector<std::string> naive_generation(const QaSample&) { return {}; }

}  // namespace compselect
