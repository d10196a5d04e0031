#include "compselect/generation.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "compselect/error.hpp"
#include "compselect/hashing.hpp"
#include "compselect/prompts.hpp"
#include "http_util.hpp"

namespace compselect {

using nlohmann::json;

namespace {

std::string normalize_prompt_whitespace(std::string_view prompt) {
  std::string out;
  std::size_t begin = 0;
  while (begin <= prompt.size()) {
    auto end = prompt.find('\n', begin);
    if (end == std::string_view::npos) end = prompt.size();
    if (!out.empty() || begin > 0) out.push_back('\n');
    out += collapse_whitespace(prompt.substr(begin, end - begin));
    begin = end + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin < text.size()) {
    auto end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  return lines;
}

}  // namespace

std::string canonical_request(const GeneratorRequest& request) {
  const json j{{"max_tokens", request.max_tokens},
               {"model_id", request.model_id},
               {"prompt", normalize_prompt_whitespace(request.prompt)},
               {"temperature", request.temperature}};
  return j.dump();
}

std::string request_hash(const GeneratorRequest& request) {
  return sha256_hex(canonical_request(request));
}

ParsedGenerationPrompt parse_generation_prompt(std::string_view prompt) {
  const auto lines = split_lines(prompt);
  std::size_t i = 0;
  while (i < lines.size() && lines[i] != "<user>") ++i;
  if (i == lines.size()) throw ContractError("generation prompt has no <user> block");
  ++i;
  constexpr std::string_view kQuestion = "Question: ";
  if (i >= lines.size() || lines[i].substr(0, kQuestion.size()) != kQuestion) {
    throw ContractError("generation prompt lacks a Question line");
  }
  ParsedGenerationPrompt parsed;
  parsed.query = std::string(lines[i].substr(kQuestion.size()));
  ++i;
  if (i < lines.size() && lines[i] == "Documents:") {
    ++i;
    while (i < lines.size() && lines[i] != "</user>") {
      const std::string label = "Doc" + std::to_string(parsed.docs.size() + 1) + ": ";
      if (lines[i].substr(0, label.size()) != label) {
        throw ContractError("expected \"" + label + "\" in generation prompt");
      }
      parsed.docs.emplace_back(lines[i].substr(label.size()));
      ++i;
    }
    if (parsed.docs.empty()) throw ContractError("empty Documents block");
  }
  if (i >= lines.size() || lines[i] != "</user>") {
    throw ContractError("generation prompt is not closed by </user>");
  }
  return parsed;
}

// ---------------------------------------------------------------------------

void MockGenerator::add_answers(const std::string& question, const std::vector<std::string>& answers) {
  auto& slot = answers_[collapse_whitespace(question)];
  for (const auto& a : answers) {
    if (std::find(slot.begin(), slot.end(), a) == slot.end()) slot.push_back(a);
  }
}

GeneratorResponse MockGenerator::generate(const GeneratorRequest& request) {
  const auto parsed = parse_generation_prompt(request.prompt);
  GeneratorResponse response;
  response.text = options_.distractor;
  if (auto it = answers_.find(parsed.query); it != answers_.end()) {
    for (const auto& answer : it->second) {
      const bool present = std::any_of(parsed.docs.begin(), parsed.docs.end(),
                                       [&](const std::string& d) { return contains_answer(d, answer); });
      if (present) {
        response.text = answer;
        break;
      }
    }
  }
  std::size_t words = 0;
  std::istringstream in(request.prompt);
  for (std::string w; in >> w;) ++words;
  response.latency_ms = options_.ms_per_token * static_cast<double>(words);
  response.request_hash = request_hash(request);
  return response;
}

// ---------------------------------------------------------------------------

OpenAIChatGenerator::OpenAIChatGenerator(ChatClientConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, config_.concurrency)) {
  if (config_.url.empty()) throw ConfigError("chat generator needs a url");
  if (config_.model.empty()) throw ConfigError("chat generator needs a model");
}

GeneratorResponse OpenAIChatGenerator::generate(const GeneratorRequest& request) {
  if (request.prompt.empty()) throw PreconditionError("empty prompt");
  if (request.temperature < 0.0) throw PreconditionError("negative temperature");

  json messages = json::array();
  constexpr std::string_view kSysOpen = "<system>\n", kSysClose = "\n</system>\n<user>\n",
                             kUserClose = "\n</user>";
  std::string_view p = request.prompt;
  while (!p.empty() && p.back() == '\n') p.remove_suffix(1);
  const auto close = p.find(kSysClose);
  if (p.substr(0, kSysOpen.size()) == kSysOpen && close != std::string_view::npos &&
      p.size() >= kUserClose.size() && p.substr(p.size() - kUserClose.size()) == kUserClose) {
    const auto user_begin = close + kSysClose.size();
    messages.push_back({{"role", "system"},
                        {"content", std::string(p.substr(kSysOpen.size(), close - kSysOpen.size()))}});
    messages.push_back({{"role", "user"},
                        {"content", std::string(p.substr(user_begin, p.size() - kUserClose.size() - user_begin))}});
  } else {
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
  }
  const json body{{"model", resolve_model(request.model_id)},
                  {"messages", messages},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_tokens}};

  std::map<std::string, std::string> headers;
  if (auto key = detail::api_key_from_env(config_.api_key_env); !key.empty()) {
    headers["Authorization"] = "Bearer " + key;
  }

  in_flight_.acquire();
  detail::HttpResult result;
  try {
    result = detail::post_json(config_.url, body.dump(), headers,
                               {config_.timeout_s, config_.max_retries, config_.backoff_ms});
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();

  GeneratorResponse response;
  try {
    const auto parsed = json::parse(result.body);
    const auto& content = parsed.at("choices").at(0).at("message").at("content");
    response.text = content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw ApiError(result.status, std::string("malformed chat response: ") + e.what());
  }
  response.latency_ms = result.latency_ms;
  response.request_hash = request_hash(request);
  return response;
}

// ---------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<GeneratorResponse> ResponseCache::get(const std::string& hash) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(hash); it != memory_.end()) return it->second;
  }
  std::ifstream in(dir_ / (hash + ".json"));
  if (!in) return std::nullopt;
  try {
    const auto j = json::parse(in);
    GeneratorResponse r;
    r.text = j.at("response").at("text").get<std::string>();
    r.latency_ms = j.at("response").at("latency_ms").get<double>();
    r.request_hash = hash;
    std::lock_guard lock(mutex_);
    memory_[hash] = r;
    return r;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const GeneratorRequest& request, const GeneratorResponse& response) {
  const auto hash = response.request_hash.empty() ? request_hash(request) : response.request_hash;
  GeneratorResponse stored = response;
  stored.cached = false;
  stored.request_hash = hash;
  {
    std::lock_guard lock(mutex_);
    memory_[hash] = stored;
  }
  const json record{{"request", json::parse(canonical_request(request))},
                    {"response", {{"text", response.text}, {"latency_ms", response.latency_ms}}}};
  const auto final_path = dir_ / (hash + ".json");
  auto tmp = final_path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write cache entry " + tmp.string());
    out << record.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, final_path);
}

GeneratorResponse CachingGenerator::generate(const GeneratorRequest& request) {
  GeneratorRequest resolved = request;
  resolved.model_id = inner_->resolve_model(request.model_id);
  const auto hash = request_hash(resolved);
  if (auto hit = cache_->get(hash)) {
    ++hits_;
    hit->cached = true;
    return *hit;
  }
  ++misses_;
  auto response = inner_->generate(resolved);
  response.request_hash = hash;
  response.cached = false;
  cache_->put(resolved, response);
  return response;
}

// ---------------------------------------------------------------------------

bool judge_answer(std::string_view generated, const std::vector<std::string>& answers,
                  CorrectnessMode mode) {
  if (mode == CorrectnessMode::subem) return contains_any_answer(generated, answers);
  const auto pred = normalize_text(generated, TokenMode::metric);
  for (const auto& a : answers) {
    if (normalize_text(a, TokenMode::metric) == pred) return true;
  }
  return false;
}

bool correct(std::string_view query, const std::vector<std::string>& contexts,
             const std::vector<std::string>& answers, Generator& generator,
             const CorrectOptions& options, GeneratorResponse* response) {
  if (answers.empty()) throw PreconditionError("correct() needs gold answers");
  GeneratorRequest request;
  request.prompt = build_generation_prompt(query, contexts);
  request.model_id = options.model_id;
  request.temperature = 0.0;
  request.max_tokens = options.max_tokens;
  auto r = generator.generate(request);
  const bool ok = judge_answer(r.text, answers, options.mode);
  if (response) *response = std::move(r);
  return ok;
}

}  // namespace compselect
