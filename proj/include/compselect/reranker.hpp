#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "compselect/baselines.hpp"
#include "compselect/clues.hpp"
#include "compselect/corpus.hpp"
#include "compselect/embedding.hpp"
#include "compselect/generation.hpp"

namespace compselect {

inline constexpr std::string_view kFeatureSchema = "compselect.features.v1";

/// Feature layout of kFeatureSchema.
enum FeatureIndex : std::size_t {
  kQueryCosine = 0,    // cosine(embed(query), embed(sentence)), 0 if either is degenerate
  kBm25 = 1,           // BM25 of the sentence against the query, pool as corpus
  kPosition = 2,       // pool index / (pool size - 1); 0 for a single-sentence pool
  kLength = 3,         // token count / longest token count in the pool
  kAnswerPattern = 4,  // share of tokens that look like answers (see compute_features)
  kFeatureCount = 5,
};

struct FeatureVector {
  std::vector<double> values;
  std::string schema_version{kFeatureSchema};
};

/// Computes features for sentences of one pool, memoizing embeddings.
class FeatureProvider {
 public:
  FeatureProvider(const SentencePool& pool, EmbeddingBackend& backend, Bm25Params bm25 = {});

  FeatureVector features(std::string_view query, std::size_t pool_index);

 private:
  const SentencePool& pool_;
  EmbeddingBackend& backend_;
  Bm25Index bm25_;
  std::vector<EmbeddingVector> sentence_vectors_;
  std::unordered_map<std::string, EmbeddingVector> query_vectors_;
  std::size_t max_tokens_ = 0;
};

/// Answer-pattern feature: among the sentence's whitespace-separated words,
/// the fraction (over all words) that, excluding the first word, start with
/// an uppercase ASCII letter or a digit and whose normalized form is not a
/// query term.
double answer_pattern_ratio(std::string_view query, std::string_view sentence);

FeatureVector compute_features(std::string_view query, const Sentence& sentence,
                               const SentencePool& pool, EmbeddingBackend& backend,
                               const Bm25Params& bm25 = {});

// ---------------------------------------------------------------------------

struct RerankPair {
  std::string sample_id;
  std::string query;
  std::size_t positive = 0;  // pool indices
  std::size_t negative = 0;
  std::string positive_text;
  std::string negative_text;
};

enum class PairExpansion { cross_product, one_negative };

struct PairAnnotationOptions {
  PairExpansion expansion = PairExpansion::cross_product;
  std::uint64_t seed = 13;
  CorrectOptions correct;
};

struct PairAnnotation {
  std::vector<RerankPair> pairs;
  std::vector<bool> labels;  // per clue, in clue order: generator answered correctly from it alone
  bool filtered = false;     // all clues correct or none correct
};

/// Probes the generator with each clue alone as context; a clue is positive
/// iff the answer is judged correct. Samples whose clues are all positive or
/// all negative are filtered and yield no pairs.
PairAnnotation annotate_pairs(const QaSample& sample, const SentencePool& pool, const ClueSet& clues,
                              Generator& generator, const PairAnnotationOptions& options = {});

// ---------------------------------------------------------------------------

struct TrainingMeta {
  int epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t pair_count = 0;
  std::uint64_t seed = 0;
  std::string optimizer;
};

/// Linear scorer: score(q, s) = weights . features(q, s) + bias.
struct RerankModel {
  std::string schema_version{kFeatureSchema};
  std::vector<double> weights;
  double bias = 0.0;
  TrainingMeta training_meta;

  double score(const FeatureVector& f) const;

  std::string to_json() const;
  static RerankModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static RerankModel load(const std::filesystem::path& path);
};

struct PairFeatures {
  std::vector<double> positive;
  std::vector<double> negative;
};

enum class Optimizer { full_batch, sgd };

struct TrainHyper {
  double learning_rate = 0.05;
  int epochs = 200;
  double l2 = 1e-4;
  std::uint64_t seed = 13;
  Optimizer optimizer = Optimizer::full_batch;
  std::size_t batch_size = 32;  // sgd only
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;  // always 0: the bias cancels in score differences
};

/// Mean over pairs of -log(e^{s+} / (e^{s+} + e^{s-})) plus l2/2 * |w|^2,
/// with its analytic gradient.
LossAndGradient pairwise_loss(std::span<const double> weights, double bias,
                              std::span<const PairFeatures> pairs, double l2);

/// Gradient descent from zero weights. Deterministic for a given pair order,
/// hyperparameters and seed. Throws PreconditionError on an empty pair list
/// and DivergenceError when the loss becomes non-finite.
RerankModel train_pairwise(std::span<const PairFeatures> pairs, const TrainHyper& hyper = {});

/// Sorts clues by model score, highest first; ties keep pool order.
ClueSet rerank(const RerankModel& model, std::string_view query, const ClueSet& clues,
               FeatureProvider& features);

/// Hit-2@1: the top-ranked clue contains a gold answer.
bool hit2_at1(const ClueSet& reranked, const SentencePool& pool, const std::vector<std::string>& answers);

}  // namespace compselect
