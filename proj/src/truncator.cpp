#include "compselect/truncator.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <random>
#include <regex>

#include "compselect/error.hpp"
#include "compselect/prompts.hpp"
#include "compselect/random.hpp"

namespace compselect {

std::string_view to_string(TruncationMethod method) {
  switch (method) {
    case TruncationMethod::oracle: return "oracle";
    case TruncationMethod::llm: return "llm";
    case TruncationMethod::random: return "random";
    case TruncationMethod::none: return "none";
  }
  return "unknown";
}

TruncationResult take_prefix(const ClueSet& reranked, std::size_t k, TruncationMethod method) {
  if (k > reranked.size()) throw PreconditionError("prefix longer than the clue set");
  TruncationResult r;
  r.prefix_length = k;
  r.method = method;
  r.clue_set = reranked;
  r.clue_set.stage = ClueStage::truncated;
  r.clue_set.clues.resize(k);
  return r;
}

TruncationResult minimal_prefix_oracle(const QaSample& sample, const SentencePool& pool,
                                       const ClueSet& reranked, Generator& generator,
                                       const OracleOptions& options) {
  if (reranked.empty()) throw PreconditionError("minimal_prefix_oracle needs a non-empty clue set");
  const auto texts = clue_texts(reranked, pool);
  std::size_t best = 0;
  std::size_t probes = 0;
  double latency = 0.0;
  for (std::size_t k = texts.size(); k >= 1; --k) {
    GeneratorResponse response;
    const std::vector<std::string> prefix(texts.begin(), texts.begin() + static_cast<std::ptrdiff_t>(k));
    const bool ok = correct(sample.question, prefix, sample.answers, generator, options.correct, &response);
    ++probes;
    latency += response.latency_ms;
    if (ok) {
      best = k;
    } else if (options.early_exit && best != 0) {
      break;
    }
  }
  auto result = take_prefix(reranked, best, TruncationMethod::oracle);
  result.probe_count = probes;
  result.generator_latency_ms = latency;
  return result;
}

TruncatorTarget make_truncator_target(const QaSample& sample, const SentencePool& pool,
                                      const ClueSet& reranked, const TruncationResult& result) {
  TruncatorTarget t;
  t.sample_id = sample.id;
  t.query = sample.question;
  t.input = build_truncator_prompt(sample.question, clue_texts(reranked, pool));
  t.prefix_length = result.prefix_length;
  t.input_size = reranked.size();
  t.empty = result.prefix_length == 0;
  t.target = t.empty ? std::string(kNoneSentinel)
                     : format_sentence_listing(clue_texts(result.clue_set, pool));
  return t;
}

void write_truncator_targets(std::span<const TruncatorTarget> targets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : targets) {
    out << nlohmann::json{{"sample_id", t.sample_id},     {"query", t.query},
                          {"input", t.input},             {"target", t.target},
                          {"empty", t.empty},             {"prefix_length", t.prefix_length},
                          {"input_size", t.input_size}}
               .dump()
        << '\n';
  }
  if (!out) throw IoError("write failure on " + path.string());
}

TruncationResult parse_truncation_response(std::string_view response, const ClueSet& reranked) {
  static const std::regex kIndex(R"(Sentence\s*(\d+))", std::regex::icase);
  const std::string text(response);
  std::size_t max_index = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kIndex); it != std::sregex_iterator(); ++it) {
    const auto digits = (*it)[1].str();
    if (digits.size() > 9) continue;
    const auto k = static_cast<std::size_t>(std::stoul(digits));
    if (k >= 1 && k <= reranked.size()) max_index = std::max(max_index, k);
  }
  if (max_index > 0) return take_prefix(reranked, max_index, TruncationMethod::llm);

  std::string upper = collapse_whitespace(text);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  while (!upper.empty() && (upper.back() == '.' || upper.back() == '"')) upper.pop_back();
  if (upper == kNoneSentinel) return take_prefix(reranked, 0, TruncationMethod::llm);

  auto fallback = take_prefix(reranked, reranked.size(), TruncationMethod::llm);
  fallback.parse_failure = true;
  return fallback;
}

TruncationResult llm_truncate(std::string_view query, const SentencePool& pool, const ClueSet& reranked,
                              Generator& generator, const std::string& model_id,
                              GeneratorResponse* response) {
  GeneratorRequest request;
  request.prompt = build_truncator_prompt(query, clue_texts(reranked, pool));
  request.model_id = model_id;
  request.temperature = 0.0;
  request.max_tokens = 1024;
  auto r = generator.generate(request);
  auto result = parse_truncation_response(r.text, reranked);
  result.probe_count = 1;
  result.generator_latency_ms = r.latency_ms;
  if (response) *response = std::move(r);
  return result;
}

TruncationResult random_truncate(const ClueSet& reranked, std::uint64_t seed) {
  if (reranked.empty()) throw PreconditionError("random_truncate needs a non-empty clue set");
  std::mt19937_64 rng(seed);
  const auto k = 1 + static_cast<std::size_t>(uniform_below(rng, reranked.size()));
  return take_prefix(reranked, k, TruncationMethod::random);
}

bool recall_3(const ClueSet& truncated, const SentencePool& pool, const std::vector<std::string>& answers) {
  return any_clue_contains_answer(truncated, pool, answers);
}

}  // namespace compselect
