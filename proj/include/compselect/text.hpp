#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace compselect {

/// Token normalization modes.
///  - raw:    lowercase, strip ASCII punctuation, collapse whitespace.
///  - metric: raw plus removal of the English articles a/an/the (QA metrics).
enum class TokenMode { raw, metric };

std::string normalize_text(std::string_view text, TokenMode mode);
std::vector<std::string> tokenize(std::string_view text, TokenMode mode = TokenMode::raw);

/// Collapses runs of whitespace to one space and trims both ends.
std::string collapse_whitespace(std::string_view text);

/// How a gold answer is matched against a text.
enum class MatchMode { normalized, raw };

/// True iff `answer` is a substring of `text`. In normalized mode both sides
/// go through metric normalization first; answers that normalize to the empty
/// string never match.
bool contains_answer(std::string_view text, std::string_view answer,
                     MatchMode mode = MatchMode::normalized);

bool contains_any_answer(std::string_view text, const std::vector<std::string>& answers,
                         MatchMode mode = MatchMode::normalized);

}  // namespace compselect
