#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "compselect/text.hpp"

namespace compselect {

struct Document {
  std::string title;  // kept as metadata, never part of the sentence pool
  std::string text;
};

/// One QA instance: the query, its gold answers and the retrieved documents
/// in retrieval order.
struct QaSample {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
  std::vector<Document> docs;
};

struct Sentence {
  std::size_t doc_index = 0;
  std::size_t sent_index = 0;
  std::string text;
  std::size_t token_count = 0;
};

/// All sentences of a sample ordered by (doc_index, sent_index).
struct SentencePool {
  std::vector<Sentence> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
  const Sentence& operator[](std::size_t i) const { return sentences[i]; }
};

enum class DatasetFormat { jsonl };

/// Reads a JSONL dataset. `limit` = 0 reads everything.
/// Throws IoError when the file cannot be read and SchemaError naming the
/// line and key of the first malformed record.
std::vector<QaSample> load_dataset(const std::filesystem::path& path,
                                   DatasetFormat format = DatasetFormat::jsonl,
                                   std::size_t limit = 0);

/// Parses a single JSONL record; `line` is only used for error messages.
QaSample parse_sample(std::string_view json_line, std::size_t line);

/// Rule-based sentence split: a sentence ends at . ! or ? (plus any closing
/// quotes or brackets) followed by whitespace and an uppercase letter or digit,
/// unless the word before a period is a known abbreviation. Whitespace is
/// collapsed, so joining the output with single spaces gives the collapsed
/// document text back.
std::vector<Sentence> segment(const Document& doc, std::size_t doc_index);

/// Abbreviations that never end a sentence when followed by a period.
const std::vector<std::string>& abbreviation_list();

SentencePool build_pool(const QaSample& sample);

/// Token count used for pool sentences and compression ratios (raw mode).
inline std::size_t count_tokens(std::string_view text) {
  return tokenize(text, TokenMode::raw).size();
}

}  // namespace compselect
