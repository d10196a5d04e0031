#include "compselect/clues.hpp"

#include <algorithm>
#include <numeric>

namespace compselect {

std::string_view to_string(ClueStage stage) {
  switch (stage) {
    case ClueStage::answer_oracle: return "answer_oracle";
    case ClueStage::knn_augmented: return "knn_augmented";
    case ClueStage::llm_extracted: return "llm_extracted";
    case ClueStage::reranked: return "reranked";
    case ClueStage::truncated: return "truncated";
    case ClueStage::pool: return "pool";
  }
  return "unknown";
}

std::vector<std::string> clue_texts(const ClueSet& set, const SentencePool& pool) {
  std::vector<std::string> out;
  out.reserve(set.size());
  for (auto i : set.clues) out.push_back(pool[i].text);
  return out;
}

ClueSet whole_pool(const SentencePool& pool) {
  ClueSet set;
  set.clues.resize(pool.size());
  std::iota(set.clues.begin(), set.clues.end(), std::size_t{0});
  return set;
}

bool any_clue_contains_answer(const ClueSet& set, const SentencePool& pool,
                              const std::vector<std::string>& answers) {
  return std::any_of(set.clues.begin(), set.clues.end(),
                     [&](std::size_t i) { return contains_any_answer(pool[i].text, answers); });
}

}  // namespace compselect
