#include "compselect/text.hpp"

#include <cctype>

namespace compselect {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

bool is_article(std::string_view token) {
  return token == "a" || token == "an" || token == "the";
}

}  // namespace

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, TokenMode mode) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (mode != TokenMode::metric || !is_article(current)) tokens.push_back(current);
    current.clear();
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (!is_ascii_punct(c)) {
      const auto u = static_cast<unsigned char>(c);
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
  }
  flush();
  return tokens;
}

std::string normalize_text(std::string_view text, TokenMode mode) {
  std::string out;
  for (const auto& token : tokenize(text, mode)) {
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

bool contains_answer(std::string_view text, std::string_view answer, MatchMode mode) {
  if (mode == MatchMode::raw) {
    return !answer.empty() && text.find(answer) != std::string_view::npos;
  }
  const std::string needle = normalize_text(answer, TokenMode::metric);
  if (needle.empty()) return false;
  return normalize_text(text, TokenMode::metric).find(needle) != std::string::npos;
}

bool contains_any_answer(std::string_view text, const std::vector<std::string>& answers,
                         MatchMode mode) {
  for (const auto& answer : answers) {
    if (contains_answer(text, answer, mode)) return true;
  }
  return false;
}

}  // namespace compselect
