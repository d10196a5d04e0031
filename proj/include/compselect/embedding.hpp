#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace compselect {

struct EmbeddingVector {
  std::vector<double> values;
  std::string backend_id;

  /// All-zero vectors (e.g. the fallback embedding of "") cannot be compared.
  bool degenerate() const noexcept;
};

/// Cosine similarity clamped to [-1, 1]. Throws PreconditionError when the
/// vectors come from different backends or differ in length, and
/// DegenerateInputError when either has zero norm.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Hashed character-trigram term frequencies, L2-normalized. `dim` >= 64.
/// The text is lowercased, whitespace-collapsed and padded with one space on
/// each side; each byte trigram lands in bucket fnv1a64(trigram) % dim.
EmbeddingVector local_fallback_embed(std::string_view text, std::size_t dim);

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual const std::string& id() const = 0;
  virtual std::size_t dimension() const = 0;
  /// One vector per text, in order. Either all vectors or an exception.
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;

  EmbeddingVector embed(const std::string& text) { return embed_batch({text}).front(); }
};

class LocalHashEmbedding final : public EmbeddingBackend {
 public:
  explicit LocalHashEmbedding(std::size_t dim = 256);
  const std::string& id() const override { return id_; }
  std::size_t dimension() const override { return dim_; }
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
  std::string id_;
};

/// Memory + optional on-disk cache keyed by SHA-256 of (backend_id, text).
/// Safe for concurrent use; concurrent writers of one key are last-writer-wins.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::optional<std::filesystem::path> dir = std::nullopt);

  std::optional<std::vector<double>> get(const std::string& backend_id, const std::string& text);
  void put(const std::string& backend_id, const std::string& text, const std::vector<double>& values);

  static std::string key(const std::string& backend_id, const std::string& text);

 private:
  std::optional<std::filesystem::path> dir_;
  std::shared_mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> memory_;
};

struct RemoteEmbeddingConfig {
  std::string url;               // e.g. http://localhost:8080/v1/embeddings
  std::string model;
  std::string api_key_env;       // name of the variable holding the bearer token
  std::size_t dimension = 0;     // 0: adopt the dimension of the first response
  double timeout_s = 30.0;
  int max_retries = 3;
  int backoff_ms = 200;
  std::optional<std::filesystem::path> cache_dir;
};

/// Generic HTTP embedding service. Sends {"model": ..., "input": [texts]} and
/// accepts either {"embeddings": [[...], ...]} or the OpenAI
/// {"data": [{"index": i, "embedding": [...]}]} response shape.
class RemoteEmbedding final : public EmbeddingBackend {
 public:
  explicit RemoteEmbedding(RemoteEmbeddingConfig config);
  const std::string& id() const override { return id_; }
  std::size_t dimension() const override;
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

  std::size_t network_calls() const noexcept { return network_calls_; }

 private:
  RemoteEmbeddingConfig config_;
  std::string id_;
  EmbeddingCache cache_;
  mutable std::shared_mutex dim_mutex_;
  std::size_t dim_;
  std::atomic<std::size_t> network_calls_{0};
};

}  // namespace compselect
