#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "compselect/clues.hpp"
#include "compselect/corpus.hpp"
#include "compselect/embedding.hpp"
#include "compselect/generation.hpp"

namespace compselect {

/// Pool sentences containing at least one gold answer, in pool order.
ClueSet answer_sentences(const QaSample& sample, const SentencePool& pool,
                         MatchMode mode = MatchMode::normalized);

/// Adds every pool sentence whose best cosine to some answer sentence is at
/// least 1 - epsilon. epsilon = 0 returns the answer set unchanged; larger
/// epsilon never shrinks the result. Output is in pool order.
ClueSet knn_augment(const ClueSet& answer_set, const SentencePool& pool, double epsilon,
                    EmbeddingBackend& backend);

/// One training record for the clue extractor.
struct ExtractorTarget {
  std::string sample_id;
  std::string query;
  std::string input;   // filled extractor prompt
  std::string target;  // "Sentence k: ..." listing in pool order, or NONE
  bool empty_target = false;
  std::size_t clue_count = 0;
};

ExtractorTarget make_extractor_target(const QaSample& sample, const SentencePool& pool,
                                      const ClueSet& clues);

struct ExtractorTargetStats {
  std::size_t samples = 0;
  std::size_t empty_targets = 0;
  double mean_clue_count = 0.0;
};

/// Writes one JSONL record per sample:
/// {"sample_id", "query", "input", "target", "empty_target", "clue_count"}.
ExtractorTargetStats emit_extractor_targets(const std::vector<QaSample>& samples, double epsilon,
                                            EmbeddingBackend& backend,
                                            const std::filesystem::path& out_path,
                                            MatchMode mode = MatchMode::normalized);

/// Maps "Sentence k: <text>" lines back onto the pool: normalized exact match
/// first, else the sentence with the highest token overlap if it exceeds 0.8.
/// Unmatched lines are kept in `unmatched`; no parseable line sets
/// parse_failure. Output follows the response order.
ClueSet parse_extraction_response(std::string_view response, const SentencePool& pool);

/// Token-overlap score in [0, 1]: 2 * |common tokens| / (|a| + |b|).
double token_overlap(std::string_view a, std::string_view b);

ClueSet llm_extract(std::string_view query, const SentencePool& pool, Generator& generator,
                    const std::string& model_id = {}, GeneratorResponse* response = nullptr);

/// Recall-1: the extracted clues still contain a gold answer.
bool recall_1(const ClueSet& clues, const SentencePool& pool, const std::vector<std::string>& answers);

}  // namespace compselect
