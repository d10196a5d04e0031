#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compselect/clues.hpp"
#include "compselect/corpus.hpp"
#include "compselect/generation.hpp"

namespace compselect {

enum class TruncationMethod { oracle, llm, random, none };

std::string_view to_string(TruncationMethod method);

struct TruncationResult {
  std::size_t prefix_length = 0;  // K; 0 means no clue is kept
  ClueSet clue_set;               // first K clues of the reranked input
  std::size_t probe_count = 0;    // generator calls spent
  TruncationMethod method = TruncationMethod::none;
  bool parse_failure = false;     // llm only: fell back to the full input
  double generator_latency_ms = 0.0;
};

/// The first `k` clues of `reranked`, stage truncated.
TruncationResult take_prefix(const ClueSet& reranked, std::size_t k, TruncationMethod method);

struct OracleOptions {
  /// Stop descending at the first failure after a success. Approximate:
  /// correctness need not be monotone in the prefix length.
  bool early_exit = false;
  CorrectOptions correct;
};

/// Probes Correct(q, D_k) for k = n down to 1 and returns the smallest k that
/// is correct, or 0 when none is. In exact mode every prefix is probed.
TruncationResult minimal_prefix_oracle(const QaSample& sample, const SentencePool& pool,
                                       const ClueSet& reranked, Generator& generator,
                                       const OracleOptions& options = {});

struct TruncatorTarget {
  std::string sample_id;
  std::string query;
  std::string input;   // filled truncator prompt over the reranked list
  std::string target;  // "Sentence k: ..." listing of the kept prefix, or NONE
  bool empty = false;
  std::size_t prefix_length = 0;
  std::size_t input_size = 0;
};

TruncatorTarget make_truncator_target(const QaSample& sample, const SentencePool& pool,
                                      const ClueSet& reranked, const TruncationResult& result);

/// JSONL, one record per target: {"sample_id", "query", "input", "target",
/// "empty", "prefix_length", "input_size"}. An empty target is the literal NONE.
void write_truncator_targets(std::span<const TruncatorTarget> targets, const std::filesystem::path& path);

/// Reads "Sentence k" indices or NONE from a truncator response and coerces
/// the kept set to the shortest prefix covering every kept index. Without any
/// usable index the full input is kept and parse_failure is set.
TruncationResult parse_truncation_response(std::string_view response, const ClueSet& reranked);

TruncationResult llm_truncate(std::string_view query, const SentencePool& pool, const ClueSet& reranked,
                              Generator& generator, const std::string& model_id = {},
                              GeneratorResponse* response = nullptr);

/// Prefix length drawn uniformly from {1..n}.
TruncationResult random_truncate(const ClueSet& reranked, std::uint64_t seed);

/// Recall-3: the kept clues still contain a gold answer.
bool recall_3(const ClueSet& truncated, const SentencePool& pool, const std::vector<std::string>& answers);

}  // namespace compselect
