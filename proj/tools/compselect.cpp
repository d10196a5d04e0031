// compselect command-line entry point.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "compselect/config.hpp"
#include "compselect/error.hpp"
#include "compselect/pipeline.hpp"

namespace {

struct Overrides {
  std::string dataset;
  std::string strategy;
  std::optional<double> epsilon;
  std::optional<std::size_t> limit;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string cache_dir;
  std::string model;
  std::string reranker_model;
};

compselect::RunConfig resolve_config(const std::string& path, const Overrides& o) {
  compselect::RunConfig c = path.empty() ? compselect::parse_config("{}") : compselect::load_config(path);
  if (!o.dataset.empty()) c.dataset = o.dataset;
  if (!o.strategy.empty()) c.strategy = compselect::strategy_from_string(o.strategy);
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.limit) c.limit = *o.limit;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) {
    c.seed = *o.seed;
    c.trainer.seed = *o.seed;
  }
  if (!o.cache_dir.empty()) c.cache_dir = o.cache_dir;
  if (!o.model.empty()) c.generator.chat.model = o.model;
  if (!o.reranker_model.empty()) c.reranker_model = o.reranker_model;
  return c;
}

int report_outcome(const compselect::CommandOutcome& outcome) {
  std::cout << outcome.summary << "\n";
  std::cout << "samples=" << outcome.samples << " quarantined=" << outcome.quarantined
            << " generator_calls=" << outcome.generator_calls << " cache_hits=" << outcome.cache_hits << "\n";
  for (const auto& a : outcome.artifacts) std::cout << "wrote " << a.string() << "\n";
  if (outcome.quarantined > 0) std::cerr << outcome.quarantined << " sample(s) quarantined\n";
  return outcome.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clue selection for retrieval-augmented QA"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config");
    sub->add_option("--dataset", overrides.dataset, "JSONL dataset path");
    sub->add_option("--strategy", overrides.strategy, "selection strategy");
    sub->add_option("--epsilon", overrides.epsilon, "KNN augmentation threshold");
    sub->add_option("--limit", overrides.limit, "only the first N samples");
    sub->add_option("--out", overrides.out, "output directory");
    sub->add_option("--seed", overrides.seed, "random seed");
    sub->add_option("--cache-dir", overrides.cache_dir, "generator response cache");
    sub->add_option("--model", overrides.model, "generator model id");
    sub->add_option("--reranker-model", overrides.reranker_model, "reranker model file");
  };

  auto* extract = app.add_subcommand("annotate-extract", "write extractor fine-tuning targets");
  auto* pairs = app.add_subcommand("annotate-rerank", "label reranker training pairs");
  auto* train = app.add_subcommand("train-reranker", "fit the pairwise reranker");
  auto* truncate = app.add_subcommand("annotate-truncate", "write truncator fine-tuning targets");
  auto* run = app.add_subcommand("run", "evaluate a strategy end to end");
  for (auto* sub : {extract, pairs, train, truncate, run}) add_common(sub);

  auto* report = app.add_subcommand("report", "compare finished runs");
  std::vector<std::string> run_dirs;
  std::string report_out = ".";
  report->add_option("runs", run_dirs, "run output directories")->required();
  report->add_option("--out", report_out, "where comparison.md/csv go");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      std::cout << compselect::cmd_report(dirs, report_out).markdown;
      return 0;
    }
    compselect::Pipeline pipeline(resolve_config(config_path, overrides));
    if (extract->parsed()) return report_outcome(pipeline.annotate_extract());
    if (pairs->parsed()) return report_outcome(pipeline.annotate_rerank());
    if (train->parsed()) return report_outcome(pipeline.train_reranker());
    if (truncate->parsed()) return report_outcome(pipeline.annotate_truncate());
    return report_outcome(pipeline.run());
  } catch (const compselect::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const compselect::UpstreamMissingError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return 2;
  } catch (const compselect::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
