#include "compselect/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>
#include <json.hpp>

#include "compselect/error.hpp"
#include "compselect/hashing.hpp"
#include "compselect/text.hpp"
#include "http_util.hpp"

namespace compselect {

using nlohmann::json;

bool EmbeddingVector::degenerate() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; });
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.backend_id != v.backend_id) {
    throw PreconditionError("cosine across backends: " + u.backend_id + " vs " + v.backend_id);
  }
  if (u.values.size() != v.values.size()) throw PreconditionError("cosine: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    dot += u.values[i] * v.values[i];
    nu += u.values[i] * u.values[i];
    nv += v.values[i] * v.values[i];
  }
  if (nu == 0.0 || nv == 0.0) throw DegenerateInputError("cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

EmbeddingVector local_fallback_embed(std::string_view text, std::size_t dim) {
  if (dim < 64) throw PreconditionError("fallback embedding dimension must be >= 64");
  EmbeddingVector out{std::vector<double>(dim, 0.0), "local-trigram-" + std::to_string(dim)};
  std::string body = collapse_whitespace(text);
  if (body.empty()) return out;
  for (auto& c : body) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  const std::string padded = " " + body + " ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    out.values[fnv1a64(std::string_view(padded).substr(i, 3)) % dim] += 1.0;
  }
  double norm = 0.0;
  for (double x : out.values) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : out.values) x /= norm;
  return out;
}

LocalHashEmbedding::LocalHashEmbedding(std::size_t dim)
    : dim_(dim), id_("local-trigram-" + std::to_string(dim)) {
  if (dim < 64) throw PreconditionError("fallback embedding dimension must be >= 64");
}

std::vector<EmbeddingVector> LocalHashEmbedding::embed_batch(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(local_fallback_embed(t, dim_));
  return out;
}

// ---------------------------------------------------------------------------

EmbeddingCache::EmbeddingCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::string EmbeddingCache::key(const std::string& backend_id, const std::string& text) {
  std::string material = backend_id;
  material.push_back('\0');
  material += text;
  return sha256_hex(material);
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& backend_id,
                                                      const std::string& text) {
  const auto k = key(backend_id, text);
  {
    std::shared_lock lock(mutex_);
    if (auto it = memory_.find(k); it != memory_.end()) return it->second;
  }
  if (!dir_) return std::nullopt;
  std::ifstream in(*dir_ / (k + ".json"));
  if (!in) return std::nullopt;
  try {
    auto j = json::parse(in);
    if (j.at("backend_id") != backend_id) return std::nullopt;
    auto values = j.at("values").get<std::vector<double>>();
    std::unique_lock lock(mutex_);
    memory_[k] = values;
    return values;
  } catch (const json::exception&) {
    return std::nullopt;  // torn or foreign file: treat as a miss
  }
}

void EmbeddingCache::put(const std::string& backend_id, const std::string& text,
                         const std::vector<double>& values) {
  const auto k = key(backend_id, text);
  {
    std::unique_lock lock(mutex_);
    memory_[k] = values;
  }
  if (!dir_) return;
  const auto final_path = *dir_ / (k + ".json");
  auto tmp = final_path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write embedding cache entry " + tmp.string());
    out << json{{"backend_id", backend_id}, {"values", values}}.dump();
  }
  std::filesystem::rename(tmp, final_path);
}

// ---------------------------------------------------------------------------

RemoteEmbedding::RemoteEmbedding(RemoteEmbeddingConfig config)
    : config_(std::move(config)),
      id_("remote:" + config_.model + "@" + config_.url),
      cache_(config_.cache_dir),
      dim_(config_.dimension) {
  if (config_.url.empty()) throw ConfigError("remote embedding backend needs a url");
}

std::size_t RemoteEmbedding::dimension() const {
  std::shared_lock lock(dim_mutex_);
  return dim_;
}

std::vector<EmbeddingVector> RemoteEmbedding::embed_batch(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) throw PreconditionError("cannot embed an empty string");
    if (auto hit = cache_.get(id_, texts[i])) {
      out[i] = {std::move(*hit), id_};
    } else {
      missing.push_back(i);
    }
  }
  if (missing.empty()) return out;

  json request{{"model", config_.model}, {"input", json::array()}};
  for (auto i : missing) request["input"].push_back(texts[i]);

  std::map<std::string, std::string> headers;
  if (auto key = detail::api_key_from_env(config_.api_key_env); !key.empty()) {
    headers["Authorization"] = "Bearer " + key;
  }
  ++network_calls_;
  const auto result = detail::post_json(config_.url, request.dump(), headers,
                                        {config_.timeout_s, config_.max_retries, config_.backoff_ms});

  std::vector<std::vector<double>> vectors;
  try {
    const auto body = json::parse(result.body);
    if (body.contains("embeddings")) {
      vectors = body.at("embeddings").get<std::vector<std::vector<double>>>();
    } else {
      const auto& data = body.at("data");
      vectors.resize(data.size());
      for (std::size_t k = 0; k < data.size(); ++k) {
        const std::size_t index = data[k].value("index", k);
        if (index >= vectors.size()) throw BackendError("embedding index out of range");
        vectors[index] = data[k].at("embedding").get<std::vector<double>>();
      }
    }
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed embedding response: ") + e.what());
  }
  if (vectors.size() != missing.size()) {
    throw BackendError("embedding service returned " + std::to_string(vectors.size()) +
                       " vectors for " + std::to_string(missing.size()) + " texts");
  }

  {
    std::unique_lock lock(dim_mutex_);
    for (const auto& v : vectors) {
      if (dim_ == 0) dim_ = v.size();
      if (v.size() != dim_) {
        throw BackendError("embedding dimension " + std::to_string(v.size()) + ", expected " +
                           std::to_string(dim_));
      }
      if (!std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) {
        throw BackendError("non-finite embedding value");
      }
    }
  }
  for (std::size_t k = 0; k < missing.size(); ++k) {
    cache_.put(id_, texts[missing[k]], vectors[k]);
    out[missing[k]] = {std::move(vectors[k]), id_};
  }
  return out;
}

}  // namespace compselect
