#include "compselect/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <unordered_set>

#include "compselect/error.hpp"

namespace compselect {
namespace {

using nlohmann::json;

const std::string& require_string(const json& obj, const char* key, std::size_t line,
                                  const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(line, path + key, "missing");
  if (!it->is_string()) throw SchemaError(line, path + key, "expected a string");
  return it->get_ref<const std::string&>();
}

// Length in bytes of a closing quote or bracket at `pos`, 0 if none.
std::size_t closing_mark(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  const char c = s[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  // U+201D and U+2019
  if (s.substr(pos, 3) == "\xE2\x80\x9D" || s.substr(pos, 3) == "\xE2\x80\x99") return 3;
  return 0;
}

std::size_t opening_mark(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  const char c = s[pos];
  if (c == '"' || c == '\'' || c == '(' || c == '[') return 1;
  // U+201C and U+2018
  if (s.substr(pos, 3) == "\xE2\x80\x9C" || s.substr(pos, 3) == "\xE2\x80\x98") return 3;
  return 0;
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_abbreviation(std::string_view word) {
  while (!word.empty() && opening_mark(word, 0) > 0) word.remove_prefix(opening_mark(word, 0));
  if (word.empty()) return false;
  static const std::unordered_set<std::string> kSet = [] {
    std::unordered_set<std::string> set;
    for (const auto& a : abbreviation_list()) set.insert(lower(a));
    return set;
  }();
  if (kSet.count(lower(word)) > 0) return true;
  // Dotted forms such as "U.S" or "e.g" (the final period is the candidate boundary).
  if (word.find('.') == std::string_view::npos) return false;
  std::size_t start = 0;
  while (start <= word.size()) {
    const auto dot = std::min(word.find('.', start), word.size());
    const auto part = word.substr(start, dot - start);
    if (part.empty() || part.size() > 2 ||
        !std::all_of(part.begin(), part.end(),
                     [](char c) { return std::isalpha(static_cast<unsigned char>(c)); })) {
      return false;
    }
    start = dot + 1;
  }
  return true;
}

}  // namespace

const std::vector<std::string>& abbreviation_list() {
  static const std::vector<std::string> kList = {
      "Mr",   "Mrs",  "Ms",  "Dr",  "Prof", "Sr",   "Jr",  "St",   "Mt",  "Ft",
      "Gen",  "Col",  "Lt",  "Sgt", "Capt", "Cmdr", "Adm", "Rev",  "Hon", "Gov",
      "Sen",  "Rep",  "Pres", "vs", "No",   "Fig",  "Vol", "Inc",  "Ltd", "Co",
      "Corp", "Bros", "Ave", "Jan", "Feb",  "Mar",  "Apr", "Jun",  "Jul", "Aug",
      "Sep",  "Sept", "Oct", "Nov", "Dec",  "approx"};
  return kList;
}

QaSample parse_sample(std::string_view json_line, std::size_t line) {
  json obj;
  try {
    obj = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw SchemaError(line, "<record>", std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw SchemaError(line, "<record>", "expected a JSON object");

  QaSample sample;
  sample.id = require_string(obj, "id", line, "");
  sample.question = require_string(obj, "question", line, "");

  auto answers = obj.find("answers");
  if (answers == obj.end()) throw SchemaError(line, "answers", "missing");
  if (!answers->is_array() || answers->empty()) {
    throw SchemaError(line, "answers", "expected a non-empty array of strings");
  }
  for (const auto& a : *answers) {
    if (!a.is_string() || a.get_ref<const std::string&>().empty()) {
      throw SchemaError(line, "answers", "answers must be non-empty strings");
    }
    sample.answers.push_back(a.get<std::string>());
  }

  auto docs = obj.find("docs");
  if (docs == obj.end()) throw SchemaError(line, "docs", "missing");
  if (!docs->is_array()) throw SchemaError(line, "docs", "expected an array");
  for (std::size_t i = 0; i < docs->size(); ++i) {
    const auto& d = (*docs)[i];
    const std::string path = "docs[" + std::to_string(i) + "].";
    if (!d.is_object()) throw SchemaError(line, "docs[" + std::to_string(i) + "]", "expected an object");
    Document doc;
    if (auto t = d.find("title"); t != d.end() && !t->is_null()) {
      if (!t->is_string()) throw SchemaError(line, path + "title", "expected a string");
      doc.title = t->get<std::string>();
    }
    doc.text = require_string(d, "text", line, path);
    if (collapse_whitespace(doc.text).empty()) throw SchemaError(line, path + "text", "empty text");
    sample.docs.push_back(std::move(doc));
  }
  return sample;
}

std::vector<QaSample> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                   std::size_t limit) {
  if (format != DatasetFormat::jsonl) throw PreconditionError("unsupported dataset format");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());

  std::vector<QaSample> samples;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (collapse_whitespace(line).empty()) continue;
    auto sample = parse_sample(line, line_no);
    if (!ids.insert(sample.id).second) throw SchemaError(line_no, "id", "duplicate id " + sample.id);
    samples.push_back(std::move(sample));
    if (limit > 0 && samples.size() >= limit) break;
  }
  if (in.bad()) throw IoError("read failure on " + path.string());
  return samples;
}

std::vector<Sentence> segment(const Document& doc, std::size_t doc_index) {
  const std::string text = collapse_whitespace(doc.text);
  std::vector<Sentence> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    if (end <= begin) return;
    Sentence s;
    s.doc_index = doc_index;
    s.sent_index = out.size();
    s.text = text.substr(begin, end - begin);
    s.token_count = count_tokens(s.text);
    out.push_back(std::move(s));
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    const std::size_t mark = i;
    std::size_t end = i + 1;
    while (end < text.size() && is_terminal(text[end])) ++end;
    while (std::size_t n = closing_mark(text, end)) end += n;

    bool boundary = end < text.size() && text[end] == ' ';
    if (boundary) {
      std::size_t next = end + 1;
      while (std::size_t n = opening_mark(text, next)) next += n;
      const auto c = next < text.size() ? static_cast<unsigned char>(text[next]) : 0;
      boundary = std::isupper(c) || std::isdigit(c);
    }
    if (boundary && text[mark] == '.' && end == mark + 1) {
      const auto word_begin = text.rfind(' ', mark);
      const auto from = word_begin == std::string::npos ? start : word_begin + 1;
      boundary = !is_abbreviation(std::string_view(text).substr(from, mark - from));
    }
    if (boundary) {
      emit(start, end);
      start = end + 1;
    }
    i = end;
  }
  emit(start, text.size());
  return out;
}

SentencePool build_pool(const QaSample& sample) {
  SentencePool pool;
  for (std::size_t d = 0; d < sample.docs.size(); ++d) {
    auto sentences = segment(sample.docs[d], d);
    pool.sentences.insert(pool.sentences.end(), std::make_move_iterator(sentences.begin()),
                          std::make_move_iterator(sentences.end()));
  }
  return pool;
}

}  // namespace compselect
