#include "compselect/reranker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "compselect/error.hpp"
#include "compselect/hashing.hpp"
#include "compselect/random.hpp"

namespace compselect {

using nlohmann::json;

namespace {

double safe_cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.degenerate() || b.degenerate()) return 0.0;
  return cosine(a, b);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(std::span<const double> w, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

}  // namespace

double answer_pattern_ratio(std::string_view query, std::string_view sentence) {
  const auto query_terms = tokenize(query, TokenMode::metric);
  const std::set<std::string> terms(query_terms.begin(), query_terms.end());
  std::istringstream in{std::string(sentence)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  if (words.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const std::string& w = words[i];
    // Skip leading quotes or brackets.
    std::size_t k = 0;
    while (k < w.size() && (w[k] == '"' || w[k] == '\'' || w[k] == '(' || w[k] == '[')) ++k;
    if (k == w.size()) continue;
    const auto c = static_cast<unsigned char>(w[k]);
    if (!(std::isupper(c) || std::isdigit(c))) continue;
    const auto norm = normalize_text(w, TokenMode::metric);
    if (norm.empty() || terms.count(norm) > 0) continue;
    ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(words.size());
}

FeatureProvider::FeatureProvider(const SentencePool& pool, EmbeddingBackend& backend, Bm25Params bm25)
    : pool_(pool), backend_(backend), bm25_(pool, bm25) {
  std::vector<std::string> texts;
  for (const auto& s : pool.sentences) {
    texts.push_back(s.text);
    max_tokens_ = std::max(max_tokens_, s.token_count);
  }
  sentence_vectors_ = backend_.embed_batch(texts);
}

FeatureVector FeatureProvider::features(std::string_view query, std::size_t pool_index) {
  if (pool_index >= pool_.size()) throw PreconditionError("sentence is not part of the pool");
  const std::string key(query);
  auto it = query_vectors_.find(key);
  if (it == query_vectors_.end()) it = query_vectors_.emplace(key, backend_.embed(key)).first;

  const auto& s = pool_[pool_index];
  FeatureVector f;
  f.values.assign(kFeatureCount, 0.0);
  f.values[kQueryCosine] = safe_cosine(it->second, sentence_vectors_[pool_index]);
  f.values[kBm25] = bm25_.score(query, pool_index);
  f.values[kPosition] = pool_.size() > 1 ? static_cast<double>(pool_index) /
                                               static_cast<double>(pool_.size() - 1)
                                         : 0.0;
  f.values[kLength] = max_tokens_ == 0 ? 0.0
                                       : static_cast<double>(s.token_count) /
                                             static_cast<double>(max_tokens_);
  f.values[kAnswerPattern] = answer_pattern_ratio(query, s.text);
  return f;
}

FeatureVector compute_features(std::string_view query, const Sentence& sentence,
                               const SentencePool& pool, EmbeddingBackend& backend,
                               const Bm25Params& bm25) {
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].doc_index == sentence.doc_index && pool[i].sent_index == sentence.sent_index) {
      FeatureProvider provider(pool, backend, bm25);
      return provider.features(query, i);
    }
  }
  throw PreconditionError("sentence is not part of the pool");
}

// ---------------------------------------------------------------------------

PairAnnotation annotate_pairs(const QaSample& sample, const SentencePool& pool, const ClueSet& clues,
                              Generator& generator, const PairAnnotationOptions& options) {
  if (clues.empty()) throw PreconditionError("annotate_pairs needs a non-empty clue set");
  PairAnnotation out;
  std::vector<std::size_t> positives, negatives;
  for (auto index : clues.clues) {
    const bool ok = correct(sample.question, {pool[index].text}, sample.answers, generator, options.correct);
    out.labels.push_back(ok);
    (ok ? positives : negatives).push_back(index);
  }
  if (positives.empty() || negatives.empty()) {
    out.filtered = true;
    return out;
  }
  auto make = [&](std::size_t p, std::size_t n) {
    return RerankPair{sample.id, sample.question, p, n, pool[p].text, pool[n].text};
  };
  if (options.expansion == PairExpansion::cross_product) {
    for (auto p : positives) {
      for (auto n : negatives) out.pairs.push_back(make(p, n));
    }
  } else {
    std::mt19937_64 rng(options.seed ^ fnv1a64(sample.id));
    for (auto p : positives) out.pairs.push_back(make(p, negatives[uniform_below(rng, negatives.size())]));
  }
  return out;
}

// ---------------------------------------------------------------------------

double RerankModel::score(const FeatureVector& f) const {
  if (f.schema_version != schema_version || f.values.size() != weights.size()) {
    throw SchemaMismatchError("model schema " + schema_version + " does not match features " +
                              f.schema_version);
  }
  return dot(weights, f.values) + bias;
}

std::string RerankModel::to_json() const {
  const json j{{"schema_version", schema_version},
               {"weights", weights},
               {"bias", bias},
               {"training_meta",
                {{"epochs", training_meta.epochs},
                 {"learning_rate", training_meta.learning_rate},
                 {"l2", training_meta.l2},
                 {"initial_loss", training_meta.initial_loss},
                 {"final_loss", training_meta.final_loss},
                 {"pair_count", training_meta.pair_count},
                 {"seed", training_meta.seed},
                 {"optimizer", training_meta.optimizer}}}};
  return j.dump(2);
}

RerankModel RerankModel::from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    RerankModel m;
    m.schema_version = j.at("schema_version").get<std::string>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    const auto& meta = j.at("training_meta");
    m.training_meta.epochs = meta.at("epochs").get<int>();
    m.training_meta.learning_rate = meta.at("learning_rate").get<double>();
    m.training_meta.l2 = meta.value("l2", 0.0);
    m.training_meta.initial_loss = meta.value("initial_loss", 0.0);
    m.training_meta.final_loss = meta.at("final_loss").get<double>();
    m.training_meta.pair_count = meta.at("pair_count").get<std::size_t>();
    m.training_meta.seed = meta.at("seed").get<std::uint64_t>();
    m.training_meta.optimizer = meta.value("optimizer", "full_batch");
    if (!std::all_of(m.weights.begin(), m.weights.end(), [](double w) { return std::isfinite(w); }) ||
        !std::isfinite(m.bias)) {
      throw SchemaError(0, "weights", "non-finite model weight");
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(0, "<model>", e.what());
  }
}

void RerankModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json() << '\n';
}

RerankModel RerankModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

LossAndGradient pairwise_loss(std::span<const double> weights, double bias,
                              std::span<const PairFeatures> pairs, double l2) {
  (void)bias;  // the bias appears in both scores and cancels
  LossAndGradient out;
  out.grad_weights.assign(weights.size(), 0.0);
  if (pairs.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  for (const auto& p : pairs) {
    // -log softmax(pos) = softplus(s- - s+)
    const double margin = dot(weights, p.positive) - dot(weights, p.negative);
    out.loss += softplus(-margin) * inv_n;
    const double g = -sigmoid(-margin) * inv_n;  // d loss / d margin
    for (std::size_t i = 0; i < weights.size(); ++i) {
      out.grad_weights[i] += g * (p.positive[i] - p.negative[i]);
    }
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.loss += 0.5 * l2 * weights[i] * weights[i];
    out.grad_weights[i] += l2 * weights[i];
  }
  return out;
}

RerankModel train_pairwise(std::span<const PairFeatures> pairs, const TrainHyper& hyper) {
  if (pairs.empty()) throw PreconditionError("train_pairwise needs at least one pair");
  if (hyper.epochs < 0 || !(hyper.learning_rate > 0.0)) {
    throw PreconditionError("train_pairwise needs epochs >= 0 and a positive learning rate");
  }
  const std::size_t dim = pairs.front().positive.size();
  for (const auto& p : pairs) {
    if (p.positive.size() != dim || p.negative.size() != dim) {
      throw PreconditionError("inconsistent feature dimensions in training pairs");
    }
  }

  RerankModel model;
  model.weights.assign(dim, 0.0);
  model.training_meta.initial_loss = pairwise_loss(model.weights, 0.0, pairs, hyper.l2).loss;

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(hyper.seed);
  std::vector<PairFeatures> batch;

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    if (hyper.optimizer == Optimizer::full_batch) {
      const auto lg = pairwise_loss(model.weights, model.bias, pairs, hyper.l2);
      if (!std::isfinite(lg.loss)) throw DivergenceError(epoch);
      for (std::size_t i = 0; i < dim; ++i) model.weights[i] -= hyper.learning_rate * lg.grad_weights[i];
    } else {
      portable_shuffle(order, rng);
      const std::size_t bs = std::max<std::size_t>(1, hyper.batch_size);
      for (std::size_t start = 0; start < order.size(); start += bs) {
        batch.clear();
        for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k) batch.push_back(pairs[order[k]]);
        const auto lg = pairwise_loss(model.weights, model.bias, batch, hyper.l2);
        if (!std::isfinite(lg.loss)) throw DivergenceError(epoch);
        for (std::size_t i = 0; i < dim; ++i) model.weights[i] -= hyper.learning_rate * lg.grad_weights[i];
      }
    }
    if (!std::all_of(model.weights.begin(), model.weights.end(), [](double w) { return std::isfinite(w); })) {
      throw DivergenceError(epoch);
    }
  }

  const double final_loss = pairwise_loss(model.weights, model.bias, pairs, hyper.l2).loss;
  if (!std::isfinite(final_loss)) throw DivergenceError(hyper.epochs);
  model.training_meta.epochs = hyper.epochs;
  model.training_meta.learning_rate = hyper.learning_rate;
  model.training_meta.l2 = hyper.l2;
  model.training_meta.final_loss = final_loss;
  model.training_meta.pair_count = pairs.size();
  model.training_meta.seed = hyper.seed;
  model.training_meta.optimizer = hyper.optimizer == Optimizer::full_batch ? "full_batch" : "sgd";
  return model;
}

ClueSet rerank(const RerankModel& model, std::string_view query, const ClueSet& clues,
               FeatureProvider& features) {
  if (model.schema_version != kFeatureSchema || model.weights.size() != kFeatureCount) {
    throw SchemaMismatchError("reranker model schema " + model.schema_version + " with " +
                              std::to_string(model.weights.size()) + " weights, expected " +
                              std::string(kFeatureSchema));
  }
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(clues.size());
  for (auto index : clues.clues) scored.emplace_back(model.score(features.features(query, index)), index);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  ClueSet out = clues;
  out.stage = ClueStage::reranked;
  out.clues.clear();
  for (const auto& [score, index] : scored) out.clues.push_back(index);
  return out;
}

bool hit2_at1(const ClueSet& reranked, const SentencePool& pool, const std::vector<std::string>& answers) {
  if (reranked.empty()) return false;
  return contains_any_answer(pool[reranked.clues.front()].text, answers);
}

}  // namespace compselect
