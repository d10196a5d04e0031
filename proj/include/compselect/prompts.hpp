#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "compselect/corpus.hpp"

namespace compselect {

/// The raw templates, byte-identical to the files under prompts/.
std::string_view generation_template();
std::string_view extractor_template();
std::string_view truncator_template();

/// Fills the answer-generation template. Contexts become "Doc1: ...",
/// "Doc2: ..." lines (internal whitespace collapsed to keep one line per
/// context). With no contexts the Documents block is dropped entirely.
std::string build_generation_prompt(std::string_view query, const std::vector<std::string>& contexts);

/// "Sentence 1: <a>\nSentence 2: <b>" (no trailing newline).
std::string format_sentence_listing(const std::vector<std::string>& sentences);

/// Documents block for the extractor: one "DocN: ..." line per document made
/// of its pool sentences in order.
std::string format_pool_documents(const SentencePool& pool);

std::string build_extractor_prompt(std::string_view query, const SentencePool& pool);

std::string build_truncator_prompt(std::string_view query, const std::vector<std::string>& ranked);

/// Literal target emitted when the minimal clue set is empty.
inline constexpr std::string_view kNoneSentinel = "NONE";

}  // namespace compselect
