#include "compselect/prompts.hpp"

#include "compselect/error.hpp"
#include "compselect/prompt_templates.hpp"

namespace compselect {
namespace {

std::string replace_once(std::string_view tmpl, std::string_view placeholder, std::string_view value) {
  const auto pos = tmpl.find(placeholder);
  if (pos == std::string_view::npos) {
    throw ContractError("template lacks placeholder " + std::string(placeholder));
  }
  std::string out(tmpl.substr(0, pos));
  out += value;
  out += tmpl.substr(pos + placeholder.size());
  return out;
}

}  // namespace

std::string_view generation_template() { return templates::kGeneration; }
std::string_view extractor_template() { return templates::kExtractor; }
std::string_view truncator_template() { return templates::kTruncator; }

std::string build_generation_prompt(std::string_view query, const std::vector<std::string>& contexts) {
  constexpr std::string_view kBlockStart = "Documents:\n";
  constexpr std::string_view kBlockEnd = "......\n";
  const std::string_view tmpl = generation_template();
  const auto begin = tmpl.find(kBlockStart);
  const auto end = tmpl.find(kBlockEnd, begin);
  if (begin == std::string_view::npos || end == std::string_view::npos) {
    throw ContractError("generation template lacks its Documents block");
  }
  std::string block;
  if (!contexts.empty()) {
    block = kBlockStart;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      block += "Doc" + std::to_string(i + 1) + ": " + collapse_whitespace(contexts[i]) + "\n";
    }
  }
  std::string filled(tmpl.substr(0, begin));
  filled += block;
  filled += tmpl.substr(end + kBlockEnd.size());
  return replace_once(filled, "{query}", collapse_whitespace(query));
}

std::string format_sentence_listing(const std::vector<std::string>& sentences) {
  std::string out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += "Sentence " + std::to_string(i + 1) + ": " + sentences[i];
  }
  return out;
}

std::string format_pool_documents(const SentencePool& pool) {
  std::string out;
  std::size_t current = static_cast<std::size_t>(-1);
  std::size_t ordinal = 0;
  for (const auto& s : pool.sentences) {
    if (s.doc_index != current) {
      if (!out.empty()) out.push_back('\n');
      current = s.doc_index;
      out += "Doc" + std::to_string(++ordinal) + ":";
    }
    out += " " + s.text;
  }
  return out;
}

std::string build_extractor_prompt(std::string_view query, const SentencePool& pool) {
  // Later placeholder first so inserted text is never searched.
  auto filled = replace_once(extractor_template(), "{Documents}", format_pool_documents(pool));
  return replace_once(filled, "{Question}", collapse_whitespace(query));
}

std::string build_truncator_prompt(std::string_view query, const std::vector<std::string>& ranked) {
  auto filled = replace_once(truncator_template(), "{Ranked List}", format_sentence_listing(ranked));
  return replace_once(filled, "{Question}", collapse_whitespace(query));
}

}  // namespace compselect
