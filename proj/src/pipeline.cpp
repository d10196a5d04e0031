#include "compselect/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <json.hpp>
#include <sstream>

#include "compselect/baselines.hpp"
#include "compselect/error.hpp"
#include "compselect/extractor.hpp"
#include "compselect/hashing.hpp"
#include "compselect/parallel.hpp"
#include "compselect/prompts.hpp"
#include "compselect/reranker.hpp"
#include "compselect/truncator.hpp"

namespace compselect {

using nlohmann::json;

namespace {

bool uses_extractor(Strategy s) {
  return s == Strategy::compselect || s == Strategy::compselect_no_reranker ||
         s == Strategy::compselect_no_truncator || s == Strategy::random_truncate;
}

bool uses_reranker(Strategy s) {
  return s == Strategy::compselect || s == Strategy::compselect_no_extractor ||
         s == Strategy::compselect_no_truncator || s == Strategy::random_truncate;
}

bool uses_truncator(Strategy s) {
  return s == Strategy::compselect || s == Strategy::compselect_no_extractor ||
         s == Strategy::compselect_no_reranker;
}

bool is_compselect_family(Strategy s) {
  return uses_extractor(s) || uses_reranker(s) || uses_truncator(s);
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failure on " + path.string());
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::exists(path)) {
    throw UpstreamMissingError("missing upstream artifact (" + std::string(what) + "): " + path.string());
  }
}

/// Per-stage time: replayed generator latency or wall-clock.
class StageTimer {
 public:
  StageTimer(TimingMode mode, std::vector<StageTiming>& sink, std::string stage)
      : mode_(mode), sink_(sink), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  void add_generator_latency(double ms) { generator_ms_ += ms; }
  void stop() {
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    sink_.push_back({stage_, mode_ == TimingMode::replay ? generator_ms_ : wall});
  }

 private:
  TimingMode mode_;
  std::vector<StageTiming>& sink_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
  double generator_ms_ = 0.0;
};

std::unique_ptr<EmbeddingBackend> make_embedding(const RunConfig& c) {
  if (c.embedding.kind == "remote") return std::make_unique<RemoteEmbedding>(c.embedding.remote);
  return std::make_unique<LocalHashEmbedding>(c.embedding.dim);
}

void write_quarantine(const std::filesystem::path& dir, const std::vector<QuarantinedSample>& q) {
  const auto path = dir / kQuarantineFile;
  if (q.empty()) {
    std::filesystem::remove(path);
    return;
  }
  std::string out;
  for (const auto& s : q) out += json{{"sample_id", s.sample_id}, {"error", s.error}}.dump() + "\n";
  write_text(path, out);
}

template <typename Slot>
std::vector<QuarantinedSample> collect_failures(const std::vector<QaSample>& samples,
                                                const std::vector<Slot>& slots) {
  std::vector<QuarantinedSample> q;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!slots[i].error.empty()) q.push_back({samples[i].id, slots[i].error});
  }
  return q;
}

}  // namespace

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {
  validate(config_);
  if (config_.generator.kind == "mock") {
    const auto s = config_.strategy;
    const bool llm_needed = (config_.extractor == ExtractorMode::llm && uses_extractor(s)) ||
                            (config_.truncator == TruncatorMode::llm && uses_truncator(s));
    if (llm_needed) {
      throw ConfigError(
          "the mock generator only answers generation prompts; set extractor and truncator to "
          "\"oracle\" or configure an openai generator");
    }
  }
  init(nullptr);
}

Pipeline::Pipeline(RunConfig config, std::shared_ptr<Generator> generator) : config_(std::move(config)) {
  validate(config_);
  init(std::move(generator));
}

void Pipeline::init(std::shared_ptr<Generator> generator) {
  if (!std::filesystem::exists(config_.dataset)) {
    throw UpstreamMissingError("dataset not found: " + config_.dataset.string());
  }
  samples_ = load_dataset(config_.dataset, DatasetFormat::jsonl, config_.limit);
  if (config_.dataset_label.empty()) config_.dataset_label = config_.dataset.stem().string();

  if (!generator) {
    if (config_.generator.kind == "mock") {
      auto mock = std::make_shared<MockGenerator>(config_.generator.mock);
      for (const auto& s : samples_) mock->add_answers(s.question, s.answers);
      generator = mock;
    } else {
      generator = std::make_shared<OpenAIChatGenerator>(config_.generator.chat);
    }
  }
  counter_ = std::make_shared<CountingGenerator>(std::move(generator));
  if (!config_.cache_dir.empty()) {
    caching_ = std::make_shared<CachingGenerator>(counter_, std::make_shared<ResponseCache>(config_.cache_dir));
    generator_ = caching_;
  } else {
    generator_ = counter_;
  }
  embedding_ = make_embedding(config_);
  std::filesystem::create_directories(config_.output_dir);
}

std::filesystem::path Pipeline::reranker_model_path() const {
  return config_.reranker_model.empty() ? config_.output_dir / kRerankerModelFile : config_.reranker_model;
}

CommandOutcome Pipeline::finish(CommandOutcome outcome, const std::vector<QuarantinedSample>& quarantined) const {
  write_quarantine(config_.output_dir, quarantined);
  outcome.samples = samples_.size();
  outcome.quarantined = quarantined.size();
  outcome.generator_calls = counter_->calls();
  outcome.cache_hits = caching_ ? caching_->hits() : 0;
  return outcome;
}

// ---------------------------------------------------------------------------

namespace {

struct ExtractContext {
  const RunConfig& config;
  Generator& generator;
  EmbeddingBackend& embedding;
};

ClueSet extract_clues(const ExtractContext& ctx, const QaSample& sample, const SentencePool& pool,
                      double& generator_ms) {
  if (ctx.config.extractor == ExtractorMode::oracle) {
    return knn_augment(answer_sentences(sample, pool, ctx.config.match_mode), pool, ctx.config.epsilon,
                       ctx.embedding);
  }
  GeneratorResponse response;
  auto clues = llm_extract(sample.question, pool, ctx.generator, ctx.config.generator.extractor_model, &response);
  generator_ms += response.latency_ms;
  return clues;
}

CorrectOptions correct_options(const RunConfig& c) {
  CorrectOptions o;
  o.mode = c.correctness;
  o.max_tokens = c.generator.max_tokens;
  return o;
}

}  // namespace

CommandOutcome Pipeline::annotate_extract() {
  const auto path = config_.output_dir / kExtractorTargetsFile;
  const auto stats = emit_extractor_targets(samples_, config_.epsilon, *embedding_, path, config_.match_mode);
  CommandOutcome out;
  out.artifacts.push_back(path);
  std::ostringstream summary;
  summary << "samples=" << stats.samples << " empty_targets=" << stats.empty_targets
          << " mean_clue_count=" << stats.mean_clue_count;
  out.summary = summary.str();
  return finish(std::move(out), {});
}

CommandOutcome Pipeline::annotate_rerank() {
  struct Slot {
    PairAnnotation annotation;
    bool no_clues = false;
    std::string error;
  };
  std::vector<Slot> slots(samples_.size());
  const ExtractContext ctx{config_, *generator_, *embedding_};
  PairAnnotationOptions options;
  options.expansion = config_.pair_expansion;
  options.seed = config_.seed;
  options.correct = correct_options(config_);

  parallel_for(samples_.size(), config_.concurrency, [&](std::size_t i) {
    try {
      const auto pool = build_pool(samples_[i]);
      double ignored = 0.0;
      const auto clues = extract_clues(ctx, samples_[i], pool, ignored);
      if (clues.empty()) {
        slots[i].no_clues = true;
        return;
      }
      slots[i].annotation = annotate_pairs(samples_[i], pool, clues, *generator_, options);
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  });

  const auto path = config_.output_dir / kRerankPairsFile;
  std::string body;
  std::size_t pairs = 0, filtered = 0, no_clues = 0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& slot = slots[i];
    if (!slot.error.empty()) continue;
    if (slot.no_clues) ++no_clues;
    if (slot.annotation.filtered) ++filtered;
    const auto pool = build_pool(samples_[i]);
    for (const auto& p : slot.annotation.pairs) {
      body += json{{"sample_id", p.sample_id},
                   {"query", p.query},
                   {"positive_text", p.positive_text},
                   {"negative_text", p.negative_text},
                   {"positive_doc", pool[p.positive].doc_index},
                   {"positive_sent", pool[p.positive].sent_index},
                   {"negative_doc", pool[p.negative].doc_index},
                   {"negative_sent", pool[p.negative].sent_index}}
                  .dump() +
              "\n";
      ++pairs;
    }
  }
  write_text(path, body);
  CommandOutcome out;
  out.artifacts.push_back(path);
  out.summary = "pairs=" + std::to_string(pairs) + " filtered_samples=" + std::to_string(filtered) +
                " samples_without_clues=" + std::to_string(no_clues);
  return finish(std::move(out), collect_failures(samples_, slots));
}

CommandOutcome Pipeline::train_reranker() {
  const auto pairs_path = config_.output_dir / kRerankPairsFile;
  require_file(pairs_path, "reranker pairs");

  std::map<std::string, const QaSample*> by_id;
  for (const auto& s : samples_) by_id[s.id] = &s;

  struct SampleFeatures {
    SentencePool pool;
    std::unique_ptr<FeatureProvider> provider;
  };
  std::map<std::string, SampleFeatures> cache;
  std::vector<PairFeatures> training;

  std::ifstream in(pairs_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(line_no, "<record>", e.what());
    }
    const auto id = j.value("sample_id", std::string());
    auto it = by_id.find(id);
    if (it == by_id.end()) throw SchemaError(line_no, "sample_id", "sample " + id + " not in dataset");
    auto& entry = cache[id];
    if (!entry.provider) {
      entry.pool = build_pool(*it->second);
      entry.provider = std::make_unique<FeatureProvider>(entry.pool, *embedding_, config_.bm25);
    }
    auto locate = [&](const char* prefix) -> std::size_t {
      const std::string p(prefix);
      const auto doc = j.value(p + "_doc", std::size_t{0});
      const auto sent = j.value(p + "_sent", std::size_t{0});
      const auto text = j.value(p + "_text", std::string());
      for (std::size_t k = 0; k < entry.pool.size(); ++k) {
        if (entry.pool[k].doc_index == doc && entry.pool[k].sent_index == sent && entry.pool[k].text == text) return k;
      }
      for (std::size_t k = 0; k < entry.pool.size(); ++k) {
        if (entry.pool[k].text == text) return k;
      }
      throw SchemaError(line_no, p + "_text", "sentence not found in the sample's pool");
    };
    const auto query = j.value("query", it->second->question);
    training.push_back({entry.provider->features(query, locate("positive")).values,
                        entry.provider->features(query, locate("negative")).values});
  }
  if (training.empty()) throw UpstreamMissingError("reranker pair file has no pairs: " + pairs_path.string());

  const auto model = train_pairwise(training, config_.trainer);
  const auto model_path = reranker_model_path();
  if (model_path.has_parent_path()) std::filesystem::create_directories(model_path.parent_path());
  model.save(model_path);
  CommandOutcome out;
  out.artifacts.push_back(model_path);
  std::ostringstream summary;
  summary << "pairs=" << training.size() << " initial_loss=" << model.training_meta.initial_loss
          << " final_loss=" << model.training_meta.final_loss;
  out.summary = summary.str();
  return finish(std::move(out), {});
}

CommandOutcome Pipeline::annotate_truncate() {
  const auto model_path = reranker_model_path();
  require_file(model_path, "reranker model");
  const auto model = RerankModel::load(model_path);

  struct Slot {
    std::optional<TruncatorTarget> target;
    std::string error;
  };
  std::vector<Slot> slots(samples_.size());
  const ExtractContext ctx{config_, *generator_, *embedding_};
  OracleOptions oracle;
  oracle.early_exit = config_.oracle_early_exit;
  oracle.correct = correct_options(config_);

  parallel_for(samples_.size(), config_.concurrency, [&](std::size_t i) {
    try {
      const auto& sample = samples_[i];
      const auto pool = build_pool(sample);
      double ignored = 0.0;
      const auto clues = extract_clues(ctx, sample, pool, ignored);
      if (clues.empty()) return;
      FeatureProvider features(pool, *embedding_, config_.bm25);
      const auto reranked = rerank(model, sample.question, clues, features);
      const auto result = minimal_prefix_oracle(sample, pool, reranked, *generator_, oracle);
      slots[i].target = make_truncator_target(sample, pool, reranked, result);
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  });

  std::vector<TruncatorTarget> targets;
  std::size_t skipped = 0, empty = 0, total_k = 0;
  for (const auto& slot : slots) {
    if (!slot.error.empty()) continue;
    if (!slot.target) {
      ++skipped;
      continue;
    }
    empty += slot.target->empty ? 1 : 0;
    total_k += slot.target->prefix_length;
    targets.push_back(*slot.target);
  }
  const auto path = config_.output_dir / kTruncatorTargetsFile;
  write_truncator_targets(targets, path);
  CommandOutcome out;
  out.artifacts.push_back(path);
  std::ostringstream summary;
  summary << "targets=" << targets.size() << " empty_targets=" << empty
          << " samples_without_clues=" << skipped << " mean_prefix_length="
          << (targets.empty() ? 0.0 : static_cast<double>(total_k) / static_cast<double>(targets.size()));
  out.summary = summary.str();
  return finish(std::move(out), collect_failures(samples_, slots));
}

// ---------------------------------------------------------------------------

CommandOutcome Pipeline::run() {
  const auto strategy = config_.strategy;
  std::optional<RerankModel> model;
  if (uses_reranker(strategy)) {
    const auto model_path = reranker_model_path();
    require_file(model_path, "reranker model");
    model = RerankModel::load(model_path);
  }

  struct Slot {
    SampleRecord record;
    std::string error;
  };
  std::vector<Slot> slots(samples_.size());
  const ExtractContext ctx{config_, *generator_, *embedding_};
  OracleOptions oracle;
  oracle.early_exit = config_.oracle_early_exit;
  oracle.correct = correct_options(config_);

  parallel_for(samples_.size(), config_.concurrency, [&](std::size_t i) {
    try {
      const auto& sample = samples_[i];
      SampleRecord rec;
      rec.sample_id = sample.id;
      std::vector<StageTiming> timings;
      std::vector<std::string> contexts;
      const auto pool = build_pool(sample);

      if (is_compselect_family(strategy)) {
        StageTimer extract_timer(config_.timing, timings, "extract");
        ClueSet extracted;
        if (strategy == Strategy::compselect_no_extractor) {
          extracted = whole_pool(pool);
        } else {
          double ms = 0.0;
          extracted = extract_clues(ctx, sample, pool, ms);
          extract_timer.add_generator_latency(ms);
        }
        extract_timer.stop();

        StageTimer rerank_timer(config_.timing, timings, "rerank");
        ClueSet reranked = extracted;
        if (model && !extracted.empty()) {
          FeatureProvider features(pool, *embedding_, config_.bm25);
          reranked = rerank(*model, sample.question, extracted, features);
        } else {
          std::sort(reranked.clues.begin(), reranked.clues.end());
          reranked.stage = ClueStage::reranked;
        }
        rerank_timer.stop();

        StageTimer truncate_timer(config_.timing, timings, "truncate");
        TruncationResult truncated;
        if (reranked.empty()) {
          truncated = take_prefix(reranked, 0, TruncationMethod::none);
        } else if (strategy == Strategy::compselect_no_truncator) {
          truncated = take_prefix(reranked, reranked.size(), TruncationMethod::none);
        } else if (strategy == Strategy::random_truncate) {
          truncated = random_truncate(reranked, config_.seed ^ fnv1a64(sample.id));
        } else if (config_.truncator == TruncatorMode::oracle) {
          truncated = minimal_prefix_oracle(sample, pool, reranked, *generator_, oracle);
        } else {
          truncated = llm_truncate(sample.question, pool, reranked, *generator_,
                                   config_.generator.truncator_model);
        }
        truncate_timer.add_generator_latency(truncated.generator_latency_ms);
        truncate_timer.stop();

        contexts = clue_texts(truncated.clue_set, pool);
        rec.recall1 = recall_1(extracted, pool, sample.answers);
        rec.hit2at1 = hit2_at1(reranked, pool, sample.answers);
        rec.recall3 = recall_3(truncated.clue_set, pool, sample.answers);
        rec.clue_count = extracted.size();
        rec.prefix_length = truncated.prefix_length;
      } else if (strategy == Strategy::bm25) {
        StageTimer rerank_timer(config_.timing, timings, "rerank");
        const auto ranked = pool.empty() ? ClueSet{} : bm25_rerank(sample.question, pool, config_.bm25, config_.bm25_top_k);
        rerank_timer.stop();
        contexts = clue_texts(ranked, pool);
      } else if (strategy == Strategy::full_content) {
        contexts = full_content(sample);
      } else {
        contexts = naive_generation(sample);
      }

      StageTimer generate_timer(config_.timing, timings, "generate");
      GeneratorRequest request;
      request.prompt = build_generation_prompt(sample.question, contexts);
      request.temperature = 0.0;
      request.max_tokens = config_.generator.max_tokens;
      const auto response = generator_->generate(request);
      generate_timer.add_generator_latency(response.latency_ms);
      generate_timer.stop();

      rec.prediction = response.text;
      rec.generation_cached = response.cached;
      rec.subem = subem(response.text, sample.answers);
      rec.f1 = token_f1(response.text, sample.answers);
      rec.rouge = rouge_max(response.text, sample.answers);

      const auto original = full_content(sample);
      rec.tokens_in = 0;
      for (const auto& d : original) rec.tokens_in += count_tokens(d);
      rec.tokens_out = 0;
      for (const auto& c : contexts) rec.tokens_out += count_tokens(c);
      if (strategy == Strategy::naive) {
        rec.cr_status = RatioStatus::undefined;
      } else {
        const auto cr = compression_ratio(original, contexts);
        rec.cr_status = cr.status;
        rec.cr = cr.value;
      }

      const auto latency = latency_accounting(timings);
      rec.total_latency_ms = latency.total_ms;
      rec.offline_latency_ms = latency.offline_ms;
      rec.online_latency_ms = latency.online_ms;
      slots[i].record = std::move(rec);
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  });

  EvalReport report;
  report.strategy = std::string(to_string(strategy));
  report.dataset = config_.dataset_label;
  report.config_fingerprint = config_fingerprint(config_);
  for (auto& slot : slots) {
    if (slot.error.empty()) report.per_sample.push_back(std::move(slot.record));
  }
  report.quarantined = collect_failures(samples_, slots);
  report.summary = aggregate(report.per_sample);
  emit_report(report, config_.output_dir, config_.formats);

  json manifest{{"config_fingerprint", report.config_fingerprint},
                {"config", json::parse(config_to_json(config_))},
                {"dataset_sha256", file_sha256(config_.dataset)},
                {"reranker_model_sha256", model ? json(file_sha256(reranker_model_path())) : json(nullptr)},
                {"samples", samples_.size()},
                {"quarantined", report.quarantined.size()}};
  json outputs = json::object();
  const std::pair<ReportFormat, const char*> files[] = {
      {ReportFormat::json, "report.json"}, {ReportFormat::csv, "report.csv"}, {ReportFormat::markdown, "report.md"}};
  CommandOutcome out;
  for (const auto& [format, name] : files) {
    if (!config_.formats.count(format)) continue;
    outputs[name] = file_sha256(config_.output_dir / name);
    out.artifacts.push_back(config_.output_dir / name);
  }
  manifest["outputs"] = outputs;
  write_text(config_.output_dir / kManifestFile, manifest.dump(2) + "\n");
  out.artifacts.push_back(config_.output_dir / kManifestFile);

  std::ostringstream summary;
  summary << "strategy=" << report.strategy << " samples=" << report.per_sample.size()
          << " quarantined=" << report.quarantined.size() << " subem=" << report.summary.subem
          << " f1=" << report.summary.f1;
  if (report.summary.cr) summary << " cr=" << *report.summary.cr;
  out.summary = summary.str();
  return finish(std::move(out), report.quarantined);
}

ComparisonTable cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                           const std::filesystem::path& out_dir) {
  if (run_dirs.empty()) throw PreconditionError("report needs at least one run directory");
  std::vector<EvalReport> reports;
  for (const auto& dir : run_dirs) {
    require_file(dir / "report.json", "run report");
    reports.push_back(load_report(dir / "report.json"));
  }
  auto table = compare_reports(reports);
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "comparison.md", table.markdown);
  write_text(out_dir / "comparison.csv", table.csv);
  return table;
}

}  // namespace compselect
