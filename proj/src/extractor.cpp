#include "compselect/extractor.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <json.hpp>
#include <regex>

#include "compselect/error.hpp"
#include "compselect/prompts.hpp"

namespace compselect {

ClueSet answer_sentences(const QaSample& sample, const SentencePool& pool, MatchMode mode) {
  if (sample.answers.empty()) throw PreconditionError("answer_sentences needs gold answers");
  ClueSet out;
  out.stage = ClueStage::answer_oracle;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (contains_any_answer(pool[i].text, sample.answers, mode)) out.clues.push_back(i);
  }
  return out;
}

ClueSet knn_augment(const ClueSet& answer_set, const SentencePool& pool, double epsilon,
                    EmbeddingBackend& backend) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw PreconditionError("epsilon must lie in [0, 1]");
  ClueSet out;
  out.stage = ClueStage::knn_augmented;
  out.epsilon = epsilon;
  if (answer_set.empty() || epsilon == 0.0) {
    out.clues = answer_set.clues;
    std::sort(out.clues.begin(), out.clues.end());
    return out;
  }

  std::vector<std::string> texts;
  texts.reserve(pool.size());
  for (const auto& s : pool.sentences) texts.push_back(s.text);
  const auto vectors = backend.embed_batch(texts);

  const double threshold = 1.0 - epsilon;
  std::vector<bool> is_answer(pool.size(), false);
  for (auto i : answer_set.clues) is_answer.at(i) = true;

  for (std::size_t i = 0; i < pool.size(); ++i) {
    bool keep = is_answer[i];
    for (auto a : answer_set.clues) {
      if (keep) break;
      const double sim = (vectors[i].degenerate() || vectors[a].degenerate())
                             ? 0.0
                             : cosine(vectors[i], vectors[a]);
      keep = sim >= threshold;
    }
    if (keep) out.clues.push_back(i);
  }
  return out;
}

ExtractorTarget make_extractor_target(const QaSample& sample, const SentencePool& pool,
                                      const ClueSet& clues) {
  ExtractorTarget t;
  t.sample_id = sample.id;
  t.query = sample.question;
  t.input = build_extractor_prompt(sample.question, pool);
  auto ordered = clues.clues;
  std::sort(ordered.begin(), ordered.end());
  std::vector<std::string> texts;
  for (auto i : ordered) texts.push_back(pool[i].text);
  t.clue_count = texts.size();
  t.empty_target = texts.empty();
  t.target = t.empty_target ? std::string(kNoneSentinel) : format_sentence_listing(texts);
  return t;
}

ExtractorTargetStats emit_extractor_targets(const std::vector<QaSample>& samples, double epsilon,
                                            EmbeddingBackend& backend,
                                            const std::filesystem::path& out_path, MatchMode mode) {
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_path.string());
  ExtractorTargetStats stats;
  std::size_t total_clues = 0;
  for (const auto& sample : samples) {
    const auto pool = build_pool(sample);
    const auto clues = knn_augment(answer_sentences(sample, pool, mode), pool, epsilon, backend);
    const auto t = make_extractor_target(sample, pool, clues);
    out << nlohmann::json{{"sample_id", t.sample_id},   {"query", t.query},
                          {"input", t.input},           {"target", t.target},
                          {"empty_target", t.empty_target}, {"clue_count", t.clue_count}}
               .dump()
        << '\n';
    ++stats.samples;
    stats.empty_targets += t.empty_target ? 1 : 0;
    total_clues += t.clue_count;
  }
  if (!out) throw IoError("write failure on " + out_path.string());
  stats.mean_clue_count =
      stats.samples == 0 ? 0.0 : static_cast<double>(total_clues) / static_cast<double>(stats.samples);
  return stats;
}

double token_overlap(std::string_view a, std::string_view b) {
  const auto ta = tokenize(a, TokenMode::raw);
  const auto tb = tokenize(b, TokenMode::raw);
  if (ta.empty() || tb.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : ta) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : tb) {
    if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(ta.size() + tb.size());
}

ClueSet parse_extraction_response(std::string_view response, const SentencePool& pool) {
  static const std::regex kLine(R"(^\s*Sentence\s+\d+\s*:\s*(.*?)\s*$)", std::regex::icase);
  ClueSet out;
  out.stage = ClueStage::llm_extracted;

  std::vector<std::string> normalized;
  normalized.reserve(pool.size());
  for (const auto& s : pool.sentences) normalized.push_back(normalize_text(s.text, TokenMode::raw));

  std::size_t parsed = 0;
  std::size_t begin = 0;
  const std::string text(response);
  while (begin < text.size()) {
    auto end = text.find('\n', begin);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(begin, end - begin);
    begin = end + 1;
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    ++parsed;
    const std::string body = m[1].str();
    const auto norm = normalize_text(body, TokenMode::raw);

    std::optional<std::size_t> match;
    for (std::size_t i = 0; i < pool.size() && !match; ++i) {
      if (!norm.empty() && normalized[i] == norm) match = i;
    }
    if (!match) {
      double best = 0.8;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const double overlap = token_overlap(body, pool[i].text);
        if (overlap > best) {
          best = overlap;
          match = i;
        }
      }
    }
    if (!match) {
      out.unmatched.push_back(body);
    } else if (std::find(out.clues.begin(), out.clues.end(), *match) == out.clues.end()) {
      out.clues.push_back(*match);
    }
  }
  out.parse_failure = parsed == 0;
  return out;
}

ClueSet llm_extract(std::string_view query, const SentencePool& pool, Generator& generator,
                    const std::string& model_id, GeneratorResponse* response) {
  GeneratorRequest request;
  request.prompt = build_extractor_prompt(query, pool);
  request.model_id = model_id;
  request.temperature = 0.0;
  request.max_tokens = 1024;
  auto r = generator.generate(request);
  auto clues = parse_extraction_response(r.text, pool);
  if (response) *response = std::move(r);
  return clues;
}

bool recall_1(const ClueSet& clues, const SentencePool& pool, const std::vector<std::string>& answers) {
  return any_clue_contains_answer(clues, pool, answers);
}

}  // namespace compselect
