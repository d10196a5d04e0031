#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compselect/corpus.hpp"

namespace compselect {

enum class ClueStage { answer_oracle, knn_augmented, llm_extracted, reranked, truncated, pool };

std::string_view to_string(ClueStage stage);

/// An ordered selection of pool sentences. `clues` holds indices into the
/// sample's SentencePool; no index appears twice.
struct ClueSet {
  std::vector<std::size_t> clues;
  ClueStage stage = ClueStage::pool;
  std::optional<double> epsilon;
  /// llm_extracted only: response lines that matched no pool sentence.
  std::vector<std::string> unmatched;
  bool parse_failure = false;

  std::size_t size() const noexcept { return clues.size(); }
  bool empty() const noexcept { return clues.empty(); }
};

std::vector<std::string> clue_texts(const ClueSet& set, const SentencePool& pool);

/// Every pool sentence, in pool order.
ClueSet whole_pool(const SentencePool& pool);

/// True iff some clue contains some gold answer under metric normalization.
bool any_clue_contains_answer(const ClueSet& set, const SentencePool& pool,
                              const std::vector<std::string>& answers);

}  // namespace compselect
