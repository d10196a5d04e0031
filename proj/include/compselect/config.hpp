#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "compselect/baselines.hpp"
#include "compselect/eval.hpp"
#include "compselect/generation.hpp"
#include "compselect/reranker.hpp"

namespace compselect {

enum class Strategy {
  compselect,
  compselect_no_extractor,
  compselect_no_reranker,
  compselect_no_truncator,
  bm25,
  full_content,
  naive,
  random_truncate,
};

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

/// Where stage-1 clues come from.
enum class ExtractorMode {
  llm,     // prompted extraction through the generator endpoint
  oracle,  // answer-containing sentences plus KNN augmentation (needs gold answers)
};

/// How stage-3 truncation is decided at run time.
enum class TruncatorMode {
  llm,     // prompted truncation through the generator endpoint
  oracle,  // minimal-prefix oracle (needs gold answers)
};

/// How stage timings are recorded in reports.
enum class TimingMode {
  replay,  // generator-call latencies only (replayed from the cache); reports are reproducible
  wall,    // wall-clock of each stage, including local compute
};

struct GeneratorConfig {
  std::string kind = "mock";  // mock | openai
  ChatClientConfig chat;
  std::string extractor_model;  // model ids for the prompted stages; empty: chat.model
  std::string truncator_model;
  int max_tokens = 64;
  MockOptions mock;
};

struct EmbeddingConfig {
  std::string kind = "local";  // local | remote
  std::size_t dim = 256;
  RemoteEmbeddingConfig remote;
};

struct RunConfig {
  std::filesystem::path dataset;
  std::string dataset_label;  // defaults to the dataset file stem
  std::size_t limit = 0;
  double epsilon = 0.15;
  Strategy strategy = Strategy::compselect;
  ExtractorMode extractor = ExtractorMode::llm;
  TruncatorMode truncator = TruncatorMode::llm;
  bool oracle_early_exit = false;
  MatchMode match_mode = MatchMode::normalized;
  CorrectnessMode correctness = CorrectnessMode::subem;
  PairExpansion pair_expansion = PairExpansion::cross_product;
  GeneratorConfig generator;
  EmbeddingConfig embedding;
  std::filesystem::path reranker_model;  // defaults to <output_dir>/reranker_model.json
  TrainHyper trainer;
  Bm25Params bm25;
  std::size_t bm25_top_k = 5;
  std::filesystem::path cache_dir;  // empty: no persistent generator cache
  std::uint64_t seed = 13;
  std::size_t concurrency = 4;
  std::filesystem::path output_dir = "out";
  TimingMode timing = TimingMode::replay;
  std::set<ReportFormat> formats{ReportFormat::json, ReportFormat::csv, ReportFormat::markdown};
};

/// Replaces ${NAME} with the value of environment variable NAME. An unset
/// variable is a ConfigError.
std::string interpolate_env(std::string_view text);

/// Parses a JSON config document (after env interpolation). Unknown keys and
/// bad enum values are ConfigErrors. Relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the full config (sorted keys).
std::string config_to_json(const RunConfig& config);
/// SHA-256 of config_to_json.
std::string config_fingerprint(const RunConfig& config);

/// Checks the fields the chosen strategy needs; throws ConfigError.
void validate(const RunConfig& config);

}  // namespace compselect
