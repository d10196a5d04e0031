#include <doctest.h>

#include <cmath>
#include <random>

#include "compselect/embedding.hpp"
#include "compselect/error.hpp"
#include "compselect/hashing.hpp"
#include "helpers.hpp"

using namespace compselect;

namespace {
EmbeddingVector vec(std::vector<double> v, std::string id = "t") { return {std::move(v), std::move(id)}; }
}  // namespace

TEST_CASE("cosine examples") {
  CHECK(cosine(vec({1, 2, 3}), vec({1, 2, 3})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  const double expected = 32.0 / (std::sqrt(14.0) * std::sqrt(77.0));
  CHECK(cosine(vec({1, 2, 3}), vec({4, 5, 6})) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(cosine(vec({1, 2, 3}), vec({4, 5, 6})) == doctest::Approx(0.974632).epsilon(1e-6));
}

TEST_CASE("cosine errors") {
  CHECK_THROWS_AS(cosine(vec({0, 0}), vec({1, 0})), DegenerateInputError);
  CHECK_THROWS_AS(cosine(vec({1, 0}), vec({1, 0, 0})), PreconditionError);
  CHECK_THROWS_AS(cosine(vec({1, 0}, "a"), vec({1, 0}, "b")), PreconditionError);
}

TEST_CASE("cosine properties on random vectors") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(8), b(8);
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng);
    const double ab = cosine(vec(a), vec(b));
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
    CHECK(cosine(vec(a), vec(a)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ab == cosine(vec(b), vec(a)));
    auto scaled = a;
    for (auto& x : scaled) x *= 3.7;
    CHECK(cosine(vec(scaled), vec(b)) == doctest::Approx(ab).epsilon(1e-9));
  }
}

TEST_CASE("fallback embedding") {
  const auto a = local_fallback_embed("Paris is lovely", 256);
  const auto b = local_fallback_embed("Paris is lovely", 256);
  CHECK(a.values == b.values);
  CHECK(a.backend_id == "local-trigram-256");
  CHECK(a.values.size() == 256);
  double norm = 0;
  for (double x : a.values) {
    CHECK(x >= 0.0);
    norm += x * x;
  }
  CHECK(norm == doctest::Approx(1.0));

  const auto empty = local_fallback_embed("", 256);
  CHECK(empty.degenerate());
  CHECK_FALSE(a.degenerate());
  CHECK_THROWS_AS(local_fallback_embed("x", 32), PreconditionError);

  // Case and whitespace do not matter.
  CHECK(local_fallback_embed("PARIS  is\nlovely", 256).values == a.values);

  // "abc" and "xyz" have disjoint trigram sets; verified these land in disjoint buckets.
  CHECK(cosine(local_fallback_embed("abc", 256), local_fallback_embed("xyz", 256)) == 0.0);
}

TEST_CASE("fallback embedding matches frozen bucket layout") {
  // " ab" -> bucket, "ab " -> bucket: two trigrams for "ab" at dim 64.
  const auto v = local_fallback_embed("ab", 64);
  std::size_t nonzero = 0;
  for (double x : v.values) nonzero += x > 0 ? 1 : 0;
  CHECK(nonzero == 2);
  CHECK(v.values[fnv1a64(" ab") % 64] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(v.values[fnv1a64("ab ") % 64] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("local backend batches in order") {
  LocalHashEmbedding backend(128);
  const auto out = backend.embed_batch({"a", "b"});
  REQUIRE(out.size() == 2);
  CHECK(out[0].values == local_fallback_embed("a", 128).values);
  CHECK(out[1].values == local_fallback_embed("b", 128).values);
  CHECK(backend.id() == "local-trigram-128");
}

TEST_CASE("embedding cache persists to disk") {
  testutil::TempDir dir;
  {
    EmbeddingCache cache(dir.path());
    CHECK_FALSE(cache.get("m", "hello"));
    cache.put("m", "hello", {1.0, 2.5});
  }
  EmbeddingCache reopened(dir.path());
  const auto hit = reopened.get("m", "hello");
  REQUIRE(hit);
  CHECK(*hit == std::vector<double>{1.0, 2.5});
  CHECK_FALSE(reopened.get("other", "hello"));
  CHECK(EmbeddingCache::key("m", "hello") != EmbeddingCache::key("mh", "ello"));
}
