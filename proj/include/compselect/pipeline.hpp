#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "compselect/config.hpp"
#include "compselect/corpus.hpp"
#include "compselect/embedding.hpp"
#include "compselect/eval.hpp"
#include "compselect/generation.hpp"

namespace compselect {

/// Counts calls that reach the wrapped generator (i.e. cache misses when it
/// sits under a CachingGenerator).
class CountingGenerator final : public Generator {
 public:
  explicit CountingGenerator(std::shared_ptr<Generator> inner) : inner_(std::move(inner)) {}
  GeneratorResponse generate(const GeneratorRequest& request) override {
    ++calls_;
    return inner_->generate(request);
  }
  std::string default_model() const override { return inner_->default_model(); }
  std::size_t calls() const noexcept { return calls_; }

 private:
  std::shared_ptr<Generator> inner_;
  std::atomic<std::size_t> calls_{0};
};

/// What a command did; exit code 3 when any sample was quarantined.
struct CommandOutcome {
  std::size_t samples = 0;
  std::size_t quarantined = 0;
  std::size_t generator_calls = 0;  // calls that missed the cache
  std::size_t cache_hits = 0;
  std::vector<std::filesystem::path> artifacts;
  std::string summary;  // one-line human readable stats

  int exit_code() const noexcept { return quarantined > 0 ? 3 : 0; }
};

// Artifact file names inside the output directory.
inline constexpr const char* kExtractorTargetsFile = "extractor_targets.jsonl";
inline constexpr const char* kRerankPairsFile = "rerank_pairs.jsonl";
inline constexpr const char* kRerankerModelFile = "reranker_model.json";
inline constexpr const char* kTruncatorTargetsFile = "truncator_targets.jsonl";
inline constexpr const char* kQuarantineFile = "quarantine.jsonl";
inline constexpr const char* kManifestFile = "run_manifest.json";

/// Stage-granular pipeline over one dataset. Each command reads upstream
/// artifacts from the output directory and writes its own there.
class Pipeline {
 public:
  /// Builds the generator and embedding backend the config describes.
  explicit Pipeline(RunConfig config);
  /// Uses `generator` instead of the configured one (still cached when a
  /// cache_dir is set).
  Pipeline(RunConfig config, std::shared_ptr<Generator> generator);

  CommandOutcome annotate_extract();
  CommandOutcome annotate_rerank();
  CommandOutcome train_reranker();
  CommandOutcome annotate_truncate();
  CommandOutcome run();

  const RunConfig& config() const noexcept { return config_; }
  const std::vector<QaSample>& samples() const noexcept { return samples_; }
  std::filesystem::path reranker_model_path() const;

 private:
  void init(std::shared_ptr<Generator> generator);
  CommandOutcome finish(CommandOutcome outcome, const std::vector<QuarantinedSample>& quarantined) const;

  RunConfig config_;
  std::vector<QaSample> samples_;
  std::shared_ptr<CountingGenerator> counter_;
  std::shared_ptr<CachingGenerator> caching_;
  std::shared_ptr<Generator> generator_;
  std::unique_ptr<EmbeddingBackend> embedding_;
};

/// Builds the side-by-side comparison of finished runs and writes
/// comparison.md / comparison.csv into `out_dir`.
ComparisonTable cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                           const std::filesystem::path& out_dir);

}  // namespace compselect
