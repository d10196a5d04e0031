// Acceptance suite: prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "compselect/baselines.hpp"
#include "compselect/error.hpp"
#include "compselect/eval.hpp"
#include "compselect/extractor.hpp"
#include "compselect/pipeline.hpp"
#include "compselect/reranker.hpp"
#include "compselect/truncator.hpp"

using namespace compselect;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class Scratch {
 public:
  Scratch() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("compselect-acceptance-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// ---------------------------------------------------------------------------
// Synthetic corpus: every answer occurs in exactly one sentence; filler
// outweighs the answer and decoy sentences by far more than 5:1 in tokens.

const std::vector<std::string> kFillerWords = {
    "river", "stone", "quiet", "market", "winter", "garden", "silver", "lantern", "harbor", "meadow",
    "copper", "forest", "window", "bridge", "valley", "candle", "orchard", "thunder", "pebble", "saddle"};

std::string filler_sentence(std::mt19937_64& rng) {
  static const std::vector<std::string> openers = {"Every", "Most", "Some", "Many", "Several"};
  std::string s = openers[rng() % openers.size()];
  for (int k = 0; k < 10; ++k) s += " " + kFillerWords[rng() % kFillerWords.size()];
  return s + ".";
}

std::vector<QaSample> synthetic_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<QaSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    QaSample s;
    s.id = "syn" + std::to_string(i);
    s.question = "Which code does registry entry " + std::to_string(i) + " list?";
    const std::string answer = "Kestrel" + std::to_string(1000 + i * 37);
    s.answers = {answer};
    std::vector<std::vector<std::string>> docs(4);
    for (auto& d : docs) {
      for (int k = 0; k < 5; ++k) d.push_back(filler_sentence(rng));
    }
    auto place = [&](const std::string& sentence) {
      auto& d = docs[rng() % docs.size()];
      d.insert(d.begin() + static_cast<std::ptrdiff_t>(rng() % (d.size() + 1)), sentence);
    };
    place("The registry lists " + answer + " as the code.");
    // Decoys resemble the answer sentence so KNN augmentation pulls them in.
    static const std::vector<std::string> decoys = {"The registry lists nothing as the code.",
                                                    "The registry lists none as the code.",
                                                    "The registry lists blank as the code."};
    for (std::size_t d = 0, nd = rng() % 4; d < nd; ++d) place(decoys[d]);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      std::string text;
      for (const auto& sentence : docs[d]) text += sentence + " ";
      s.docs.push_back({"Doc " + std::to_string(d), text});
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_corpus(const std::vector<QaSample>& samples, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& s : samples) {
    json docs = json::array();
    for (const auto& d : s.docs) docs.push_back({{"title", d.title}, {"text", d.text}});
    out << json{{"id", s.id}, {"question", s.question}, {"answers", s.answers}, {"docs", docs}}.dump() << "\n";
  }
}

RunConfig synthetic_config(const fs::path& root) {
  RunConfig c;
  c.dataset = root / "synthetic.jsonl";
  c.dataset_label = "synthetic";
  c.output_dir = root / "annotate";
  c.extractor = ExtractorMode::oracle;
  c.truncator = TruncatorMode::oracle;
  c.epsilon = 0.3;
  c.cache_dir = root / "cache";
  c.seed = 13;
  c.trainer.seed = 13;
  return c;
}

/// Shared state for the corpus-level criteria.
struct SyntheticRun {
  fs::path root;
  std::vector<QaSample> samples;
  RunConfig config;
  double elapsed_s = 0.0;
  std::string error;
};

SyntheticRun& synthetic(const fs::path& root) {
  static SyntheticRun run;
  static bool ready = false;
  if (ready) return run;
  ready = true;
  run.root = root;
  run.samples = synthetic_corpus(200, 2024);
  write_corpus(run.samples, root / "synthetic.jsonl");
  run.config = synthetic_config(root);
  const auto start = std::chrono::steady_clock::now();
  try {
    Pipeline p(run.config);
    p.annotate_rerank();
    p.train_reranker();
    p.annotate_truncate();
    RunConfig rc = run.config;
    rc.strategy = Strategy::compselect;
    rc.output_dir = root / "run_compselect";
    rc.reranker_model = run.config.output_dir / kRerankerModelFile;
    Pipeline(rc).run();
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

/// Independent recomputation of the reranked clue list for one sample.
ClueSet reranked_for(const QaSample& s, const SentencePool& pool, const RunConfig& c, const RerankModel& model,
                     EmbeddingBackend& backend) {
  const auto clues = knn_augment(answer_sentences(s, pool), pool, c.epsilon, backend);
  FeatureProvider features(pool, backend, c.bm25);
  return rerank(model, s.question, clues, features);
}

// ---------------------------------------------------------------------------

Outcome criterion1(const fs::path& root) {
  auto& run = synthetic(root);
  if (!run.error.empty()) return {false, run.error};
  const auto report = load_report(root / "run_compselect" / "report.json");
  const auto model = RerankModel::load(run.config.output_dir / kRerankerModelFile);
  LocalHashEmbedding backend(run.config.embedding.dim);
  std::size_t mismatched = 0, k_above_one = 0;
  for (std::size_t i = 0; i < run.samples.size(); ++i) {
    const auto& s = run.samples[i];
    const auto pool = build_pool(s);
    const auto reranked = reranked_for(s, pool, run.config, model, backend);
    std::size_t position = 0;
    for (std::size_t r = 0; r < reranked.size(); ++r) {
      if (contains_answer(pool[reranked.clues[r]].text, s.answers[0])) position = r + 1;
    }
    const auto& rec = report.per_sample.at(i);
    if (rec.sample_id != s.id || !rec.prefix_length || *rec.prefix_length != position) ++mismatched;
    if (position > 1) ++k_above_one;
  }
  std::ostringstream d;
  d << "samples=" << report.per_sample.size() << " subem=" << report.summary.subem << " k_mismatches=" << mismatched
    << " samples_with_K>1=" << k_above_one << " runtime_s=" << run.elapsed_s;
  const bool pass = report.per_sample.size() == 200 && report.quarantined.empty() && report.summary.subem == 1.0 &&
                    mismatched == 0 && run.elapsed_s < 60.0;
  return {pass, d.str()};
}

Outcome criterion2(const fs::path& root) {
  auto& run = synthetic(root);
  if (!run.error.empty()) return {false, run.error};
  const auto model = RerankModel::load(run.config.output_dir / kRerankerModelFile);
  LocalHashEmbedding backend(run.config.embedding.dim);
  std::map<std::string, const QaSample*> by_id;
  for (const auto& s : run.samples) by_id[s.id] = &s;

  std::ifstream in(run.config.output_dir / kTruncatorTargetsFile);
  std::size_t records = 0, violations = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++records;
    const auto j = json::parse(line);
    const auto& s = *by_id.at(j["sample_id"].get<std::string>());
    const auto k = j["prefix_length"].get<std::size_t>();
    const auto pool = build_pool(s);
    const auto reranked = reranked_for(s, pool, run.config, model, backend);
    MockGenerator judge;
    judge.add_answers(s.question, s.answers);
    for (std::size_t prefix = 0; prefix <= reranked.size(); ++prefix) {
      std::vector<std::string> ctx;
      for (std::size_t r = 0; r < prefix; ++r) ctx.push_back(pool[reranked.clues[r]].text);
      const bool ok = correct(s.question, ctx, s.answers, judge);
      if (prefix < k && ok) ++violations;
      if (prefix == k && k > 0 && !ok) ++violations;
      if (k == 0 && ok) ++violations;
    }
  }
  std::ostringstream d;
  d << "annotated=" << records << " violations=" << violations;
  return {records == run.samples.size() && violations == 0, d.str()};
}

Outcome criterion3() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  auto random_pairs = [&](std::size_t n) {
    std::vector<PairFeatures> pairs(n);
    for (auto& p : pairs) {
      p.positive.resize(kFeatureCount);
      p.negative.resize(kFeatureCount);
      for (auto& x : p.positive) x = nd(rng);
      for (auto& x : p.negative) x = nd(rng);
    }
    return pairs;
  };
  // (a) identical features at zero weights.
  auto same = random_pairs(25);
  for (auto& p : same) p.negative = p.positive;
  const double init = pairwise_loss(std::vector<double>(kFeatureCount, 0.0), 0.0, same, 1e-4).loss;
  const bool a = std::abs(init - std::log(2.0)) < 1e-9;

  // (b) central differences at 100 random points.
  const auto pairs = random_pairs(20);
  double worst = 0.0;
  for (int point = 0; point < 100; ++point) {
    std::vector<double> w(kFeatureCount);
    for (auto& x : w) x = nd(rng);
    const auto g = pairwise_loss(w, 0.0, pairs, 1e-4);
    for (std::size_t k = 0; k < w.size(); ++k) {
      auto wp = w, wm = w;
      wp[k] += 1e-5;
      wm[k] -= 1e-5;
      const double fd = (pairwise_loss(wp, 0.0, pairs, 1e-4).loss - pairwise_loss(wm, 0.0, pairs, 1e-4).loss) / 2e-5;
      const double denom = std::max({std::abs(fd), std::abs(g.grad_weights[k]), 1e-8});
      worst = std::max(worst, std::abs(fd - g.grad_weights[k]) / denom);
    }
  }
  const bool b = worst < 1e-4;

  // (c) separable pairs on one dimension.
  std::vector<PairFeatures> separable;
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    PairFeatures p{std::vector<double>(kFeatureCount), std::vector<double>(kFeatureCount)};
    for (std::size_t k = 0; k < kFeatureCount; ++k) p.positive[k] = p.negative[k] = noise(rng);
    p.positive[kAnswerPattern] = 1.0;
    p.negative[kAnswerPattern] = -1.0;
    separable.push_back(p);
  }
  TrainHyper hyper;
  hyper.learning_rate = 0.5;
  const auto model = train_pairwise(separable, hyper);
  std::size_t correct_order = 0;
  for (const auto& p : separable) {
    const double sp = model.score({p.positive, std::string(kFeatureSchema)});
    const double sn = model.score({p.negative, std::string(kFeatureSchema)});
    correct_order += sp > sn ? 1 : 0;
  }
  const double accuracy = static_cast<double>(correct_order) / static_cast<double>(separable.size());
  const bool c = model.training_meta.final_loss < 0.1 && accuracy == 1.0;

  std::ostringstream d;
  d << "init_loss_err=" << std::abs(init - std::log(2.0)) << " worst_grad_rel_err=" << worst
    << " final_loss=" << model.training_meta.final_loss << " accuracy=" << accuracy;
  return {a && b && c, d.str()};
}

Outcome criterion4() {
  std::ifstream in(std::string(COMPSELECT_FIXTURES) + "/metric_cases.json");
  const auto cases = json::parse(in);
  std::size_t total = 0, bad = 0;
  for (const auto& c : cases["subem"]) {
    ++total;
    bad += subem(c["prediction"].get<std::string>(), c["answers"]) != c["expected"].get<int>();
  }
  for (const auto& c : cases["f1"]) {
    ++total;
    bad += std::abs(token_f1(c["prediction"].get<std::string>(), c["answers"]) - c["expected"].get<double>()) >= 1e-6;
  }
  for (const auto& c : cases["rouge"]) {
    ++total;
    const auto r = rouge_max(c["prediction"].get<std::string>(), c["references"]);
    bad += std::abs(r.rouge1 - c["rouge1"].get<double>()) >= 1e-6 || std::abs(r.rouge2 - c["rouge2"].get<double>()) >= 1e-6 ||
           std::abs(r.rougeL - c["rougeL"].get<double>()) >= 1e-6;
  }
  std::ostringstream d;
  d << "cases=" << total << " mismatches=" << bad;
  return {total >= 20 && bad == 0, d.str()};
}

double brute_bm25(const std::vector<std::string>& query_terms, const std::vector<std::vector<std::string>>& docs,
                  std::size_t idx) {
  const double n = static_cast<double>(docs.size());
  double total_len = 0;
  for (const auto& d : docs) total_len += static_cast<double>(d.size());
  const double avg = total_len / n;
  std::set<std::string> unique(query_terms.begin(), query_terms.end());
  double score = 0;
  for (const auto& t : unique) {
    double df = 0;
    for (const auto& d : docs) df += std::find(d.begin(), d.end(), t) != d.end() ? 1 : 0;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    const double tf = static_cast<double>(std::count(docs[idx].begin(), docs[idx].end(), t));
    const double norm = 1.2 * (1.0 - 0.75 + 0.75 * static_cast<double>(docs[idx].size()) / avg);
    score += idf * (tf * 2.2) / (tf + norm);
  }
  return score;
}

Outcome criterion5() {
  // Lowercase, punctuation-free, article-free text so the brute-force side
  // can split on spaces.
  const std::vector<std::vector<std::string>> docs = {
      {"quick", "brown", "fox", "jumps", "over", "lazy", "dog"},
      {"fox", "is", "quick", "animal", "fox"},
      {"dogs", "and", "cats", "are", "pets", "dog", "barks"},
      {"paris", "is", "capital", "of", "france"},
      {"capital", "of", "germany", "is", "berlin", "big", "city", "city"}};
  QaSample s{"bm25", "q", {"x"}, {}};
  for (const auto& d : docs) {
    std::string text;
    for (const auto& w : d) text += w + " ";
    s.docs.push_back({"", text});
  }
  const auto pool = build_pool(s);
  std::set<std::string> vocab_set;
  for (const auto& d : docs) vocab_set.insert(d.begin(), d.end());
  vocab_set.insert("zebra");
  const std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());
  std::mt19937_64 rng(5);
  Bm25Index index(pool);
  double worst = 0;
  for (int q = 0; q < 20; ++q) {
    std::vector<std::string> terms;
    std::string query;
    for (std::size_t k = 0, n = 1 + rng() % 4; k < n; ++k) {
      terms.push_back(vocab[rng() % vocab.size()]);
      query += terms.back() + " ";
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
      worst = std::max(worst, std::abs(index.score(query, i) - brute_bm25(terms, docs, i)));
    }
  }
  std::ostringstream d;
  d << "queries=20 max_abs_err=" << worst;
  return {worst < 1e-6, d.str()};
}

Outcome criterion6() {
  std::mt19937_64 rng(606);
  LocalHashEmbedding backend(256);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "river", "Paris", "stone", "the"};
  std::size_t exact_failures = 0, subset_failures = 0;
  for (int t = 0; t < 100; ++t) {
    QaSample s{"k" + std::to_string(t), "q", {words[rng() % words.size()]}, {}};
    for (std::size_t d = 0, nd = 1 + rng() % 3; d < nd; ++d) {
      std::string text;
      for (std::size_t k = 0, ns = 1 + rng() % 4; k < ns; ++k) {
        text += "Word";
        for (int w = 0; w < 4; ++w) text += " " + words[rng() % words.size()];
        text += ". ";
      }
      s.docs.push_back({"", text});
    }
    const auto pool = build_pool(s);
    const auto oracle = answer_sentences(s, pool);
    if (knn_augment(oracle, pool, 0.0, backend).clues != oracle.clues) ++exact_failures;
    std::vector<std::size_t> prev = oracle.clues;
    for (double eps : {0.05, 0.1, 0.15, 0.3, 0.5, 1.0}) {
      const auto cur = knn_augment(oracle, pool, eps, backend).clues;
      for (auto i : prev) {
        if (std::find(cur.begin(), cur.end(), i) == cur.end()) ++subset_failures;
      }
      prev = cur;
    }
  }
  std::ostringstream d;
  d << "samples=100 eps0_mismatches=" << exact_failures << " subset_violations=" << subset_failures;
  return {exact_failures == 0 && subset_failures == 0, d.str()};
}

Outcome criterion7() {
  const std::string q = "Which city hosts the summit?";
  MockGenerator mock;
  mock.add_answers(q, {"Geneva"});
  auto make = [&](const std::vector<std::string>& sentences) {
    QaSample s{"f", q, {"Geneva"}, {}};
    for (const auto& t : sentences) s.docs.push_back({"", t});
    return s;
  };
  const auto zero = make({"Lyon is large.", "Oslo is cold.", "Rome is old."});
  const auto all = make({"Geneva one.", "Geneva two.", "Geneva three."});
  const auto mixed = make({"Lyon is large.", "Geneva hosts it.", "Rome is old.", "Geneva again."});
  std::ostringstream d;
  bool pass = true;
  for (const auto* s : {&zero, &all, &mixed}) {
    const auto pool = build_pool(*s);
    const auto out = annotate_pairs(*s, pool, whole_pool(pool), mock);
    // Expected pairs: every (positive, negative) combination, positives and
    // negatives relabeled by substring presence.
    std::vector<std::pair<std::size_t, std::size_t>> expected, got;
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < pool.size(); ++i) (contains_answer(pool[i].text, "Geneva") ? pos : neg).push_back(i);
    if (!pos.empty() && !neg.empty()) {
      for (auto p : pos) {
        for (auto n : neg) expected.push_back({p, n});
      }
    }
    for (const auto& p : out.pairs) got.push_back({p.positive, p.negative});
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    pass = pass && got == expected && out.filtered == expected.empty();
    d << (s == &zero ? "zero" : s == &all ? " all" : " mixed") << "_pairs=" << got.size();
  }
  pass = pass && annotate_pairs(mixed, build_pool(mixed), whole_pool(build_pool(mixed)), mock).pairs.size() == 4;
  return {pass, d.str()};
}

Outcome criterion8(const fs::path& root) {
  auto& run = synthetic(root);
  if (!run.error.empty()) return {false, run.error};
  RunConfig fc = run.config;
  fc.strategy = Strategy::full_content;
  fc.output_dir = root / "run_full_content";
  Pipeline(fc).run();
  const auto full = load_report(fc.output_dir / "report.json");
  const auto cs = load_report(root / "run_compselect" / "report.json");
  std::size_t full_bad = 0, latency_bad = 0;
  for (const auto& r : full.per_sample) {
    if (r.cr_status != RatioStatus::ok || std::abs(r.cr - 1.0) > 1e-12) ++full_bad;
  }
  for (const auto* rep : {&full, &cs}) {
    for (const auto& r : rep->per_sample) {
      if (std::abs(r.total_latency_ms - (r.offline_latency_ms + r.online_latency_ms)) > 1.0) ++latency_bad;
    }
  }
  const double mean_cr = cs.summary.cr.value_or(0.0);
  std::ostringstream d;
  d << "full_content_cr_violations=" << full_bad << " compselect_mean_cr=" << mean_cr
    << " cr_infinite=" << cs.summary.cr_infinite << " latency_identity_violations=" << latency_bad;
  return {full.per_sample.size() == 200 && full_bad == 0 && mean_cr >= 5.0 && latency_bad == 0, d.str()};
}

Outcome criterion9(const fs::path& root) {
  auto& run = synthetic(root);
  if (!run.error.empty()) return {false, run.error};
  RunConfig rc = run.config;
  rc.strategy = Strategy::compselect;
  rc.reranker_model = run.config.output_dir / kRerankerModelFile;
  rc.output_dir = root / "determinism";
  const std::vector<std::string> files = {"report.json", "report.csv", "report.md", kManifestFile};
  std::vector<std::string> first;
  Pipeline(rc).run();
  for (const auto& f : files) first.push_back(read_file(rc.output_dir / f));
  const auto second_outcome = Pipeline(rc).run();
  std::size_t differing = 0;
  for (std::size_t i = 0; i < files.size(); ++i) differing += read_file(rc.output_dir / files[i]) != first[i];
  std::ostringstream d;
  d << "files_compared=" << files.size() << " differing=" << differing
    << " second_run_generator_calls=" << second_outcome.generator_calls;
  return {differing == 0 && second_outcome.generator_calls == 0, d.str()};
}

std::optional<Outcome> criterion10(const fs::path& root) {
  const char* url = std::getenv("COMPSELECT_LIVE_URL");
  const char* model = std::getenv("COMPSELECT_LIVE_MODEL");
  const char* dataset = std::getenv("COMPSELECT_LIVE_DATASET");
  if (!url || !model || !dataset) return std::nullopt;
  RunConfig c;
  c.dataset = dataset;
  c.limit = 50;
  c.generator.kind = "openai";
  c.generator.chat.url = url;
  c.generator.chat.model = model;
  c.cache_dir = root / "live_cache";
  c.output_dir = root / "live_annotate";
  c.extractor = ExtractorMode::llm;
  c.truncator = TruncatorMode::llm;
  try {
    Pipeline annotate(c);
    annotate.annotate_rerank();
    annotate.train_reranker();
    std::vector<fs::path> dirs;
    for (auto s : {Strategy::naive, Strategy::full_content, Strategy::bm25, Strategy::compselect}) {
      RunConfig rc = c;
      rc.strategy = s;
      rc.reranker_model = c.output_dir / kRerankerModelFile;
      rc.output_dir = root / ("live_" + std::string(to_string(s)));
      Pipeline(rc).run();
      dirs.push_back(rc.output_dir);
    }
    const auto table = cmd_report(dirs, root / "live_report");
    const auto cs = load_report(dirs.back() / "report.json");
    std::size_t non_empty = 0;
    for (const auto& r : cs.per_sample) non_empty += r.prefix_length.value_or(0) > 0;
    const double share = cs.per_sample.empty() ? 0.0 : static_cast<double>(non_empty) / static_cast<double>(cs.per_sample.size());
    const bool table_ok = std::count(table.csv.begin(), table.csv.end(), '\n') == 5;
    const bool cr_ok = cs.summary.cr && *cs.summary.cr > 1.0;
    std::ostringstream d;
    d << "samples=" << cs.per_sample.size() << " non_empty_share=" << share << " table_ok=" << table_ok
      << " cr=" << cs.summary.cr.value_or(0.0);
    return Outcome{share >= 0.6 && table_ok && cr_ok, d.str()};
  } catch (const std::exception& e) {
    return Outcome{false, e.what()};
  }
}

}  // namespace

int main() {
  Scratch scratch;
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  };
  const auto& root = scratch.path();
  report(1, "mock end-to-end soundness", [&] { return criterion1(root); });
  report(2, "truncation minimality", [&] { return criterion2(root); });
  report(3, "pairwise trainer", [] { return criterion3(); });
  report(4, "metric oracle equivalence", [] { return criterion4(); });
  report(5, "bm25 fidelity", [] { return criterion5(); });
  report(6, "knn degenerate and monotone", [] { return criterion6(); });
  report(7, "annotation filtering", [] { return criterion7(); });
  report(8, "compression accounting", [&] { return criterion8(root); });
  report(9, "determinism", [&] { return criterion9(root); });
  if (auto live = criterion10(root)) {
    std::cout << (live->pass ? "PASS" : "FAIL") << " criterion 10 (live endpoint smoke): " << live->detail << std::endl;
    failures += live->pass ? 0 : 1;
  } else {
    std::cout << "SKIP criterion 10 (live endpoint smoke): set COMPSELECT_LIVE_URL, COMPSELECT_LIVE_MODEL and "
                 "COMPSELECT_LIVE_DATASET to run it"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
