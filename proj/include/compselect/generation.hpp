#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "compselect/text.hpp"

namespace compselect {

struct GeneratorRequest {
  std::string prompt;
  std::string model_id;  // empty: the generator's default model
  double temperature = 0.0;
  int max_tokens = 64;
};

struct GeneratorResponse {
  std::string text;
  double latency_ms = 0.0;  // original wall-clock latency, replayed on cache hits
  bool cached = false;
  std::string request_hash;
};

/// Canonical JSON of a request: sorted keys, prompt with CRLF folded to LF,
/// runs of blanks inside each line collapsed and line ends trimmed.
std::string canonical_request(const GeneratorRequest& request);
std::string request_hash(const GeneratorRequest& request);

class Generator {
 public:
  virtual ~Generator() = default;
  virtual GeneratorResponse generate(const GeneratorRequest& request) = 0;
  /// Model used when a request leaves model_id empty.
  virtual std::string default_model() const = 0;

  std::string resolve_model(const std::string& requested) const {
    return requested.empty() ? default_model() : requested;
  }
};

/// Query and Doc blocks recovered from a generation prompt.
struct ParsedGenerationPrompt {
  std::string query;
  std::vector<std::string> docs;
};

/// Inverse of build_generation_prompt. Throws ContractError on template drift.
ParsedGenerationPrompt parse_generation_prompt(std::string_view prompt);

struct MockOptions {
  std::string distractor = "unknown entity";
  double ms_per_token = 0.05;  // simulated latency per whitespace token of the prompt
};

/// Deterministic oracle generator: answers with the gold answer of the query
/// iff it (normalized) occurs in some Doc block, otherwise with the distractor.
class MockGenerator final : public Generator {
 public:
  explicit MockGenerator(MockOptions options = {}) : options_(std::move(options)) {}

  /// Registers gold answers for a question; repeated questions merge answers.
  void add_answers(const std::string& question, const std::vector<std::string>& answers);

  GeneratorResponse generate(const GeneratorRequest& request) override;
  std::string default_model() const override { return "mock"; }

 private:
  MockOptions options_;
  std::unordered_map<std::string, std::vector<std::string>> answers_;
};

struct ChatClientConfig {
  std::string url;  // full chat-completions URL
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  int concurrency = 4;
  double timeout_s = 60.0;
  int max_retries = 3;
  int backoff_ms = 200;
};

/// OpenAI-compatible /chat/completions client. A prompt of the form
/// "<system>\n...\n</system>\n<user>\n...\n</user>" is sent as a system and a
/// user message; any other prompt as a single user message.
class OpenAIChatGenerator final : public Generator {
 public:
  explicit OpenAIChatGenerator(ChatClientConfig config);
  GeneratorResponse generate(const GeneratorRequest& request) override;
  std::string default_model() const override { return config_.model; }

 private:
  ChatClientConfig config_;
  std::counting_semaphore<1024> in_flight_;
};

/// One JSON file per request hash holding the canonical request and the
/// response. Writes go through a temporary file and a rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<GeneratorResponse> get(const std::string& hash);
  void put(const GeneratorRequest& canonical_source, const GeneratorResponse& response);

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::unordered_map<std::string, GeneratorResponse> memory_;
};

/// Consults the cache before the wrapped generator and persists every miss.
class CachingGenerator final : public Generator {
 public:
  CachingGenerator(std::shared_ptr<Generator> inner, std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  GeneratorResponse generate(const GeneratorRequest& request) override;
  std::string default_model() const override { return inner_->default_model(); }

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  std::shared_ptr<Generator> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// How a generated answer is judged against the gold answers.
enum class CorrectnessMode {
  subem,   // any normalized gold answer is a substring of the normalized output
  strict,  // normalized output equals some normalized gold answer
};

struct CorrectOptions {
  CorrectnessMode mode = CorrectnessMode::subem;
  std::string model_id;
  int max_tokens = 64;
};

/// Generates an answer from the contexts at temperature 0 and judges it.
/// `response` receives the generator output when non-null.
bool correct(std::string_view query, const std::vector<std::string>& contexts,
             const std::vector<std::string>& answers, Generator& generator,
             const CorrectOptions& options = {}, GeneratorResponse* response = nullptr);

bool judge_answer(std::string_view generated, const std::vector<std::string>& answers,
                  CorrectnessMode mode);

}  // namespace compselect
