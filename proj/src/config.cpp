#include "compselect/config.hpp"

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "compselect/error.hpp"
#include "compselect/hashing.hpp"

namespace compselect {

using nlohmann::json;

namespace {

struct StrategyName {
  Strategy value;
  std::string_view name;
};

constexpr StrategyName kStrategies[] = {
    {Strategy::compselect, "compselect"},
    {Strategy::compselect_no_extractor, "compselect_no_extractor"},
    {Strategy::compselect_no_reranker, "compselect_no_reranker"},
    {Strategy::compselect_no_truncator, "compselect_no_truncator"},
    {Strategy::bm25, "bm25"},
    {Strategy::full_content, "full_content"},
    {Strategy::naive, "naive"},
    {Strategy::random_truncate, "random_truncate"},
};

// Reads the keys of one JSON object, rejecting any key nobody asked for.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  void path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = p.is_relative() && !base.empty() ? base / p : p;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string where(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + (key.empty() ? "" : "." + std::string(key));
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key " + where(k));
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E>
E pick(const std::string& value, std::initializer_list<std::pair<std::string_view, E>> options,
       const std::string& key) {
  for (const auto& [name, e] : options) {
    if (name == value) return e;
  }
  throw ConfigError("invalid value \"" + value + "\" for " + key);
}

template <typename E>
std::string name_of(E value, std::initializer_list<std::pair<std::string_view, E>> options) {
  for (const auto& [name, e] : options) {
    if (e == value) return std::string(name);
  }
  return "unknown";
}

const std::initializer_list<std::pair<std::string_view, ExtractorMode>> kExtractorModes = {
    {"llm", ExtractorMode::llm}, {"oracle", ExtractorMode::oracle}};
const std::initializer_list<std::pair<std::string_view, TruncatorMode>> kTruncatorModes = {
    {"llm", TruncatorMode::llm}, {"oracle", TruncatorMode::oracle}};
const std::initializer_list<std::pair<std::string_view, TimingMode>> kTimingModes = {
    {"replay", TimingMode::replay}, {"wall", TimingMode::wall}};
const std::initializer_list<std::pair<std::string_view, MatchMode>> kMatchModes = {
    {"normalized", MatchMode::normalized}, {"raw", MatchMode::raw}};
const std::initializer_list<std::pair<std::string_view, CorrectnessMode>> kCorrectness = {
    {"subem", CorrectnessMode::subem}, {"strict", CorrectnessMode::strict}};
const std::initializer_list<std::pair<std::string_view, PairExpansion>> kExpansions = {
    {"cross_product", PairExpansion::cross_product}, {"one_negative", PairExpansion::one_negative}};
const std::initializer_list<std::pair<std::string_view, Optimizer>> kOptimizers = {
    {"full_batch", Optimizer::full_batch}, {"sgd", Optimizer::sgd}};
const std::initializer_list<std::pair<std::string_view, ReportFormat>> kFormats = {
    {"json", ReportFormat::json}, {"csv", ReportFormat::csv}, {"markdown", ReportFormat::markdown}};

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& e : kStrategies) {
    if (e.value == s) return e.name;
  }
  return "unknown";
}

Strategy strategy_from_string(std::string_view s) {
  for (const auto& e : kStrategies) {
    if (e.name == s) return e.value;
  }
  throw ConfigError("unknown strategy \"" + std::string(s) + "\"");
}

std::string interpolate_env(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 2, "${") == 0) {
      const auto close = text.find('}', i + 2);
      if (close == std::string_view::npos) throw ConfigError("unterminated ${ in config");
      const std::string name(text.substr(i + 2, close - i - 2));
      const char* value = std::getenv(name.c_str());
      if (!value) throw ConfigError("environment variable " + name + " is not set");
      out += value;
      i = close + 1;
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(interpolate_env(json_text));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(root, "");
  r.path("dataset", c.dataset, base_dir);
  r.get("dataset_label", c.dataset_label);
  r.get("limit", c.limit);
  r.get("epsilon", c.epsilon);
  std::string s;
  r.get("strategy", s);
  if (!s.empty()) c.strategy = strategy_from_string(s);
  s.clear();
  r.get("extractor", s);
  if (!s.empty()) c.extractor = pick(s, kExtractorModes, "extractor");
  s.clear();
  r.get("truncator", s);
  if (!s.empty()) c.truncator = pick(s, kTruncatorModes, "truncator");
  r.get("oracle_early_exit", c.oracle_early_exit);
  s.clear();
  r.get("match_mode", s);
  if (!s.empty()) c.match_mode = pick(s, kMatchModes, "match_mode");
  s.clear();
  r.get("correctness", s);
  if (!s.empty()) c.correctness = pick(s, kCorrectness, "correctness");
  s.clear();
  r.get("pair_expansion", s);
  if (!s.empty()) c.pair_expansion = pick(s, kExpansions, "pair_expansion");

  if (const json* g = r.child("generator")) {
    Reader gr(*g, "generator");
    gr.get("kind", c.generator.kind);
    gr.get("url", c.generator.chat.url);
    gr.get("model", c.generator.chat.model);
    gr.get("api_key_env", c.generator.chat.api_key_env);
    gr.get("concurrency", c.generator.chat.concurrency);
    gr.get("timeout_s", c.generator.chat.timeout_s);
    gr.get("max_retries", c.generator.chat.max_retries);
    gr.get("backoff_ms", c.generator.chat.backoff_ms);
    gr.get("extractor_model", c.generator.extractor_model);
    gr.get("truncator_model", c.generator.truncator_model);
    gr.get("max_tokens", c.generator.max_tokens);
    gr.get("mock_distractor", c.generator.mock.distractor);
    gr.get("mock_ms_per_token", c.generator.mock.ms_per_token);
    gr.finish();
  }
  if (const json* e = r.child("embedding")) {
    Reader er(*e, "embedding");
    er.get("kind", c.embedding.kind);
    er.get("dim", c.embedding.dim);
    er.get("url", c.embedding.remote.url);
    er.get("model", c.embedding.remote.model);
    er.get("api_key_env", c.embedding.remote.api_key_env);
    er.get("dimension", c.embedding.remote.dimension);
    er.get("timeout_s", c.embedding.remote.timeout_s);
    er.get("max_retries", c.embedding.remote.max_retries);
    er.get("backoff_ms", c.embedding.remote.backoff_ms);
    std::filesystem::path cache;
    er.path("cache_dir", cache, base_dir);
    if (!cache.empty()) c.embedding.remote.cache_dir = cache;
    er.finish();
  }
  r.path("reranker_model", c.reranker_model, base_dir);
  r.get("seed", c.seed);
  c.trainer.seed = c.seed;
  if (const json* t = r.child("trainer")) {
    Reader tr(*t, "trainer");
    tr.get("learning_rate", c.trainer.learning_rate);
    tr.get("epochs", c.trainer.epochs);
    tr.get("l2", c.trainer.l2);
    tr.get("seed", c.trainer.seed);
    std::string opt;
    tr.get("optimizer", opt);
    if (!opt.empty()) c.trainer.optimizer = pick(opt, kOptimizers, "trainer.optimizer");
    tr.get("batch_size", c.trainer.batch_size);
    tr.finish();
  }
  if (const json* b = r.child("bm25")) {
    Reader br(*b, "bm25");
    br.get("k1", c.bm25.k1);
    br.get("b", c.bm25.b);
    br.get("top_k", c.bm25_top_k);
    br.finish();
  }
  r.path("cache_dir", c.cache_dir, base_dir);
  r.get("concurrency", c.concurrency);
  r.path("output_dir", c.output_dir, base_dir);
  s.clear();
  r.get("timing", s);
  if (!s.empty()) c.timing = pick(s, kTimingModes, "timing");
  std::vector<std::string> formats;
  r.get("formats", formats);
  if (!formats.empty()) {
    c.formats.clear();
    for (const auto& f : formats) c.formats.insert(pick(f, kFormats, "formats"));
  }
  r.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string config_to_json(const RunConfig& c) {
  std::vector<std::string> formats;
  for (auto f : c.formats) formats.push_back(name_of(f, kFormats));
  const json j{
      {"dataset", c.dataset.generic_string()},
      {"dataset_label", c.dataset_label},
      {"limit", c.limit},
      {"epsilon", c.epsilon},
      {"strategy", to_string(c.strategy)},
      {"extractor", name_of(c.extractor, kExtractorModes)},
      {"truncator", name_of(c.truncator, kTruncatorModes)},
      {"oracle_early_exit", c.oracle_early_exit},
      {"match_mode", name_of(c.match_mode, kMatchModes)},
      {"correctness", name_of(c.correctness, kCorrectness)},
      {"pair_expansion", name_of(c.pair_expansion, kExpansions)},
      {"generator",
       {{"kind", c.generator.kind},
        {"url", c.generator.chat.url},
        {"model", c.generator.chat.model},
        {"api_key_env", c.generator.chat.api_key_env},
        {"concurrency", c.generator.chat.concurrency},
        {"timeout_s", c.generator.chat.timeout_s},
        {"max_retries", c.generator.chat.max_retries},
        {"backoff_ms", c.generator.chat.backoff_ms},
        {"extractor_model", c.generator.extractor_model},
        {"truncator_model", c.generator.truncator_model},
        {"max_tokens", c.generator.max_tokens},
        {"mock_distractor", c.generator.mock.distractor},
        {"mock_ms_per_token", c.generator.mock.ms_per_token}}},
      {"embedding",
       {{"kind", c.embedding.kind},
        {"dim", c.embedding.dim},
        {"url", c.embedding.remote.url},
        {"model", c.embedding.remote.model},
        {"api_key_env", c.embedding.remote.api_key_env},
        {"dimension", c.embedding.remote.dimension},
        {"timeout_s", c.embedding.remote.timeout_s},
        {"max_retries", c.embedding.remote.max_retries},
        {"backoff_ms", c.embedding.remote.backoff_ms},
        {"cache_dir", c.embedding.remote.cache_dir ? c.embedding.remote.cache_dir->generic_string() : ""}}},
      {"reranker_model", c.reranker_model.generic_string()},
      {"trainer",
       {{"learning_rate", c.trainer.learning_rate},
        {"epochs", c.trainer.epochs},
        {"l2", c.trainer.l2},
        {"seed", c.trainer.seed},
        {"optimizer", name_of(c.trainer.optimizer, kOptimizers)},
        {"batch_size", c.trainer.batch_size}}},
      {"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}, {"top_k", c.bm25_top_k}}},
      {"cache_dir", c.cache_dir.generic_string()},
      {"seed", c.seed},
      {"concurrency", c.concurrency},
      {"output_dir", c.output_dir.generic_string()},
      {"timing", name_of(c.timing, kTimingModes)},
      {"formats", formats}};
  return j.dump();
}

std::string config_fingerprint(const RunConfig& config) {
  // The output location does not influence any output byte.
  RunConfig c = config;
  c.output_dir.clear();
  return sha256_hex(config_to_json(c));
}

void validate(const RunConfig& c) {
  if (c.dataset.empty()) throw ConfigError("config needs a dataset path");
  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (c.generator.kind != "mock" && c.generator.kind != "openai") {
    throw ConfigError("generator.kind must be mock or openai");
  }
  if (c.generator.kind == "openai" && (c.generator.chat.url.empty() || c.generator.chat.model.empty())) {
    throw ConfigError("generator.url and generator.model are required for an openai generator");
  }
  if (c.embedding.kind != "local" && c.embedding.kind != "remote") {
    throw ConfigError("embedding.kind must be local or remote");
  }
  if (c.embedding.kind == "local" && c.embedding.dim < 64) throw ConfigError("embedding.dim must be >= 64");
  if (c.embedding.kind == "remote" && c.embedding.remote.url.empty()) {
    throw ConfigError("embedding.url is required for a remote embedding backend");
  }
  if (c.bm25_top_k == 0) throw ConfigError("bm25.top_k must be >= 1");
  if (!(c.bm25.k1 > 0.0) || c.bm25.b < 0.0 || c.bm25.b > 1.0) throw ConfigError("bm25 needs k1 > 0, b in [0, 1]");
  if (c.concurrency == 0) throw ConfigError("concurrency must be >= 1");
  if (c.formats.empty()) throw ConfigError("at least one report format is required");
}

}  // namespace compselect
