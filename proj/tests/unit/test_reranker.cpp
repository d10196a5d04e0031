#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>

#include "compselect/error.hpp"
#include "compselect/extractor.hpp"
#include "compselect/reranker.hpp"
#include "helpers.hpp"

using namespace compselect;
using nlohmann::json;

namespace {

std::vector<PairFeatures> random_pairs(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  std::vector<PairFeatures> pairs(n);
  for (auto& p : pairs) {
    p.positive.resize(kFeatureCount);
    p.negative.resize(kFeatureCount);
    for (auto& x : p.positive) x = nd(rng);
    for (auto& x : p.negative) x = nd(rng);
  }
  return pairs;
}

RerankModel model_with(std::vector<double> w) {
  RerankModel m;
  m.weights = std::move(w);
  return m;
}

}  // namespace

TEST_CASE("feature fixture matches the independent oracle") {
  std::ifstream in(testutil::fixture_path("knn_features.json"));
  const auto fixture = json::parse(in)["features"];
  const auto sample = testutil::make_sample("f", fixture["query"], {"Paris"},
                                            fixture["pool"].get<std::vector<std::string>>());
  const auto pool = build_pool(sample);
  REQUIRE(pool.size() == 5);
  LocalHashEmbedding backend(256);
  const auto expected = fixture["expected"].get<std::vector<std::vector<double>>>();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto f = compute_features(sample.question, pool[i], pool, backend);
    CHECK(f.schema_version == std::string(kFeatureSchema));
    REQUIRE(f.values.size() == expected[i].size());
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      CHECK(f.values[k] == doctest::Approx(expected[i][k]).epsilon(1e-9));
    }
  }
  // Sentence identical to the query and the first pool position anchors.
  CHECK(compute_features(sample.question, pool[3], pool, backend).values[kQueryCosine] == doctest::Approx(1.0));
  CHECK(compute_features(sample.question, pool[0], pool, backend).values[kPosition] == 0.0);
}

TEST_CASE("answer pattern ratio") {
  CHECK(answer_pattern_ratio("Who won?", "He beat Smith in 1999") == doctest::Approx(2.0 / 5.0));
  CHECK(answer_pattern_ratio("Who is Smith?", "He beat Smith") == 0.0);
  CHECK(answer_pattern_ratio("q", "") == 0.0);
}

TEST_CASE("pairwise loss is ln 2 at zero weights and for identical features") {
  std::mt19937_64 rng(1);
  auto pairs = random_pairs(rng, 17);
  const std::vector<double> zero(kFeatureCount, 0.0);
  CHECK(std::abs(pairwise_loss(zero, 0.0, pairs, 0.0).loss - std::log(2.0)) < 1e-9);
  for (auto& p : pairs) p.negative = p.positive;
  const std::vector<double> w = {0.3, -1.2, 2.0, 0.1, 0.7};
  CHECK(std::abs(pairwise_loss(w, 5.0, pairs, 0.0).loss - std::log(2.0)) < 1e-9);
}

TEST_CASE("pairwise gradient matches central finite differences") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  const auto pairs = random_pairs(rng, 12);
  const double h = 1e-5;
  int failures = 0;
  for (int point = 0; point < 100; ++point) {
    std::vector<double> w(kFeatureCount);
    for (auto& x : w) x = nd(rng);
    const auto analytic = pairwise_loss(w, 0.0, pairs, 1e-3);
    CHECK(analytic.grad_bias == 0.0);
    for (std::size_t k = 0; k < w.size(); ++k) {
      auto wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      const double numeric =
          (pairwise_loss(wp, 0.0, pairs, 1e-3).loss - pairwise_loss(wm, 0.0, pairs, 1e-3).loss) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic.grad_weights[k]), 1e-8});
      if (std::abs(numeric - analytic.grad_weights[k]) / denom >= 1e-4) ++failures;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("training on separable pairs") {
  std::vector<PairFeatures> pairs;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> noise(-0.5, 0.5);
  for (int i = 0; i < 40; ++i) {
    PairFeatures p{std::vector<double>(kFeatureCount), std::vector<double>(kFeatureCount)};
    for (std::size_t k = 0; k < kFeatureCount; ++k) p.positive[k] = p.negative[k] = noise(rng);
    p.positive[kBm25] = 1.0;
    p.negative[kBm25] = -1.0;
    pairs.push_back(p);
  }
  for (auto optimizer : {Optimizer::full_batch, Optimizer::sgd}) {
    TrainHyper hyper;
    hyper.optimizer = optimizer;
    hyper.learning_rate = 0.5;
    const auto model = train_pairwise(pairs, hyper);
    CHECK(model.training_meta.initial_loss == doctest::Approx(std::log(2.0)));
    CHECK(model.training_meta.final_loss < 0.1);
    CHECK(model.training_meta.final_loss < model.training_meta.initial_loss);
    for (const auto& p : pairs) {
      CHECK(model.score({p.positive, std::string(kFeatureSchema)}) > model.score({p.negative, std::string(kFeatureSchema)}));
    }
    // Fixed seed reproduces the model exactly.
    CHECK(train_pairwise(pairs, hyper).weights == model.weights);
  }
  CHECK_THROWS_AS(train_pairwise(std::vector<PairFeatures>{}), PreconditionError);
}

TEST_CASE("divergence is reported with its epoch") {
  std::vector<PairFeatures> pairs = {{{1e308, 0, 0, 0, 0}, {-1e308, 0, 0, 0, 0}}};
  TrainHyper hyper;
  hyper.learning_rate = 1e10;
  hyper.l2 = 1.0;
  try {
    train_pairwise(pairs, hyper);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 0);
  }
}

TEST_CASE("rerank properties") {
  auto sample = testutil::make_sample("r", "Where is the Eiffel Tower?", {"Paris"},
                                      {"Bananas grow on trees.", "The Eiffel Tower is in Paris.",
                                       "Where is the Eiffel Tower?", "Towers are tall."});
  const auto pool = build_pool(sample);
  LocalHashEmbedding backend;
  FeatureProvider features(pool, backend);
  ClueSet clues;
  clues.clues = {3, 1, 0, 2};

  const auto zero = rerank(model_with(std::vector<double>(kFeatureCount, 0.0)), sample.question, clues, features);
  CHECK(zero.clues == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(zero.stage == ClueStage::reranked);

  std::vector<double> cos_only(kFeatureCount, 0.0);
  cos_only[kQueryCosine] = 1.0;
  const auto by_cos = rerank(model_with(cos_only), sample.question, clues, features);
  std::vector<std::pair<double, std::size_t>> expected;
  for (auto i : clues.clues) expected.push_back({-features.features(sample.question, i).values[kQueryCosine], i});
  std::sort(expected.begin(), expected.end());
  std::vector<std::size_t> order;
  for (const auto& e : expected) order.push_back(e.second);
  CHECK(by_cos.clues == order);
  CHECK(by_cos.clues.front() == 2);

  auto shifted = model_with(cos_only);
  shifted.bias = 42.0;
  CHECK(rerank(shifted, sample.question, clues, features).clues == by_cos.clues);

  ClueSet single;
  single.clues = {1};
  CHECK(rerank(model_with(cos_only), sample.question, single, features).clues == single.clues);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> w(kFeatureCount);
    for (auto& x : w) x = nd(rng);
    auto out = rerank(model_with(w), sample.question, clues, features).clues;
    std::sort(out.begin(), out.end());
    CHECK(out == std::vector<std::size_t>{0, 1, 2, 3});
  }

  auto bad = model_with(cos_only);
  bad.schema_version = "compselect.features.v0";
  CHECK_THROWS_AS(rerank(bad, sample.question, clues, features), SchemaMismatchError);
}

TEST_CASE("hit2_at1") {
  auto sample = testutil::make_sample("h", "q", {"Paris"}, {"Paris here.", "Nothing."});
  const auto pool = build_pool(sample);
  ClueSet first, second;
  first.clues = {0, 1};
  second.clues = {1, 0};
  CHECK(hit2_at1(first, pool, sample.answers));
  CHECK_FALSE(hit2_at1(second, pool, sample.answers));
  CHECK_FALSE(hit2_at1(ClueSet{}, pool, sample.answers));
}

TEST_CASE("model json round trip") {
  auto m = model_with({0.5, -0.25, 1.0, 0.0, 2.0});
  m.bias = 0.125;
  m.training_meta.epochs = 7;
  m.training_meta.final_loss = 0.01;
  m.training_meta.optimizer = "full_batch";
  testutil::TempDir dir;
  m.save(dir / "m.json");
  const auto loaded = RerankModel::load(dir / "m.json");
  CHECK(loaded.weights == m.weights);
  CHECK(loaded.bias == m.bias);
  CHECK(loaded.training_meta.epochs == 7);
  CHECK(loaded.to_json() == m.to_json());
  CHECK_THROWS(RerankModel::from_json(R"({"schema_version":"other","weights":[1,2,3,4,5],"bias":0})"));
}

TEST_CASE("annotate_pairs filtering rule") {
  MockGenerator mock;
  const std::string q = "Which city?";
  mock.add_answers(q, {"Paris"});
  auto sample = testutil::make_sample("a", q, {"Paris"},
                                      {"Lyon is large.", "Paris is the capital.", "Nice is sunny."});
  const auto pool = build_pool(sample);
  ClueSet clues;
  clues.clues = {0, 1, 2};

  const auto mixed = annotate_pairs(sample, pool, clues, mock);
  CHECK_FALSE(mixed.filtered);
  CHECK(mixed.labels == std::vector<bool>{false, true, false});
  REQUIRE(mixed.pairs.size() == 2);
  CHECK(mixed.pairs[0].positive == 1);
  CHECK(mixed.pairs[0].negative == 0);
  CHECK(mixed.pairs[1].positive == 1);
  CHECK(mixed.pairs[1].negative == 2);
  CHECK(mixed.pairs[0].positive_text == "Paris is the capital.");

  auto all = testutil::make_sample("b", q, {"Paris"}, {"Paris one.", "Paris two.", "Paris three."});
  const auto all_pool = build_pool(all);
  const auto all_out = annotate_pairs(all, all_pool, clues, mock);
  CHECK(all_out.filtered);
  CHECK(all_out.pairs.empty());

  auto none = testutil::make_sample("c", q, {"Paris"}, {"Lyon.", "Nice.", "Metz."});
  const auto none_pool = build_pool(none);
  const auto none_out = annotate_pairs(none, none_pool, clues, mock);
  CHECK(none_out.filtered);
  CHECK(none_out.pairs.empty());

  PairAnnotationOptions one;
  one.expansion = PairExpansion::one_negative;
  const auto single = annotate_pairs(sample, pool, clues, mock, one);
  REQUIRE(single.pairs.size() == 1);
  CHECK(single.pairs[0].positive == 1);
  CHECK((single.pairs[0].negative == 0 || single.pairs[0].negative == 2));
  CHECK(annotate_pairs(sample, pool, clues, mock, one).pairs[0].negative == single.pairs[0].negative);

  CHECK_THROWS_AS(annotate_pairs(sample, pool, ClueSet{}, mock), PreconditionError);
}

TEST_CASE("annotate_pairs agrees with brute-force relabeling") {
  std::mt19937_64 rng(31);
  const std::vector<std::string> fillers = {"Lyon is large.", "Nice is sunny.", "Metz is old.", "Paris is big.",
                                            "Rome has Paris shops.", "Oslo is cold."};
  MockGenerator mock;
  const std::string q = "Which?";
  mock.add_answers(q, {"Paris"});
  for (int t = 0; t < 100; ++t) {
    std::vector<std::string> docs;
    for (std::size_t i = 0, n = 2 + rng() % 4; i < n; ++i) docs.push_back(fillers[rng() % fillers.size()]);
    auto sample = testutil::make_sample("s" + std::to_string(t), q, {"Paris"}, docs);
    const auto pool = build_pool(sample);
    const auto clues = whole_pool(pool);
    const auto out = annotate_pairs(sample, pool, clues, mock);
    std::size_t pos = 0, neg = 0;
    for (auto i : clues.clues) (contains_answer(pool[i].text, "Paris") ? pos : neg)++;
    CHECK(out.filtered == (pos == 0 || neg == 0));
    CHECK(out.pairs.size() == (out.filtered ? 0 : pos * neg));
    for (const auto& p : out.pairs) {
      CHECK(contains_answer(pool[p.positive].text, "Paris"));
      CHECK_FALSE(contains_answer(pool[p.negative].text, "Paris"));
    }
  }
}
