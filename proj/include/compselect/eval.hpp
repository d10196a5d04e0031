#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace compselect {

/// 1 iff some normalized gold answer is a substring of the normalized prediction.
int subem(std::string_view prediction, const std::vector<std::string>& answers);

/// SQuAD-style token F1 (multiset overlap of metric-normalized tokens), max
/// over gold answers. Both sides empty -> 1, exactly one empty -> 0.
double token_f1(std::string_view prediction, const std::vector<std::string>& answers);

struct RougeScores {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

/// ROUGE-1/2 (clipped n-gram overlap) and ROUGE-L (LCS) F-measures, beta = 1,
/// no stemming, on raw-mode tokens (lowercased, punctuation stripped, articles
/// kept). A side without any n-gram scores 0 unless both token sequences are
/// identical, which scores 1.
RougeScores rouge(std::string_view prediction, std::string_view reference);

/// Per-metric maximum over several references.
RougeScores rouge_max(std::string_view prediction, const std::vector<std::string>& references);

enum class RatioStatus { ok, infinite, undefined };

std::string_view to_string(RatioStatus status);

struct CompressionRatio {
  RatioStatus status = RatioStatus::undefined;
  double value = 0.0;  // meaningful only when status == ok
};

/// Original over compressed token count (raw-mode tokens). An empty compressed
/// context is `infinite`; an empty original is `undefined`.
CompressionRatio compression_ratio(const std::vector<std::string>& original,
                                   const std::vector<std::string>& compressed);

struct StageTiming {
  std::string stage;  // extract, rerank, truncate (offline) or generate (online)
  double ms = 0.0;
};

struct Latency {
  double total_ms = 0.0;
  double offline_ms = 0.0;
  double online_ms = 0.0;
};

/// total = offline + online. Throws MeasurementError on a negative timing and
/// PreconditionError on an unknown stage label.
Latency latency_accounting(const std::vector<StageTiming>& timings);

// ---------------------------------------------------------------------------

inline constexpr std::string_view kReportSchema = "compselect.report.v1";

struct SampleRecord {
  std::string sample_id;
  std::string prediction;
  int subem = 0;
  double f1 = 0.0;
  RougeScores rouge;
  RatioStatus cr_status = RatioStatus::undefined;
  double cr = 0.0;
  std::size_t tokens_in = 0;
  std::size_t tokens_out = 0;
  double total_latency_ms = 0.0;
  double offline_latency_ms = 0.0;
  double online_latency_ms = 0.0;
  bool generation_cached = false;
  std::optional<bool> recall1;
  std::optional<bool> hit2at1;
  std::optional<bool> recall3;
  std::optional<std::size_t> clue_count;
  std::optional<std::size_t> prefix_length;
};

struct Aggregate {
  std::size_t samples = 0;
  double subem = 0.0;
  double f1 = 0.0;
  RougeScores rouge;
  std::optional<double> cr;  // mean over samples with a finite ratio
  std::size_t cr_infinite = 0;
  std::size_t cr_undefined = 0;
  double tokens_in = 0.0;
  double tokens_out = 0.0;
  double total_latency_ms = 0.0;
  double offline_latency_ms = 0.0;
  double online_latency_ms = 0.0;
  std::optional<double> recall1;
  std::optional<double> hit2at1;
  std::optional<double> recall3;
};

Aggregate aggregate(const std::vector<SampleRecord>& records);

struct QuarantinedSample {
  std::string sample_id;
  std::string error;
};

struct EvalReport {
  std::string schema_version{kReportSchema};
  std::string strategy;
  std::string dataset;
  std::string config_fingerprint;
  std::vector<SampleRecord> per_sample;
  Aggregate summary;
  std::vector<QuarantinedSample> quarantined;
};

std::string report_to_json(const EvalReport& report);
/// Throws SchemaMismatchError for another report schema version.
EvalReport report_from_json(std::string_view text);
EvalReport load_report(const std::filesystem::path& path);

/// CSV with a fixed column order: header plus one row per sample.
std::string report_to_csv(const EvalReport& report);

/// Markdown summary: the SubEM | F1 | CR row, then latency and cascading metrics.
std::string report_to_markdown(const EvalReport& report);

enum class ReportFormat { json, csv, markdown };

/// Writes report.json / report.csv / report.md into `dir`.
void emit_report(const EvalReport& report, const std::filesystem::path& dir,
                 const std::set<ReportFormat>& formats);

/// Side-by-side table, one row per strategy and SubEM/F1/CR columns per
/// dataset; absent cells are "-".
struct ComparisonTable {
  std::string markdown;
  std::string csv;
};
ComparisonTable compare_reports(const std::vector<EvalReport>& reports);

/// Human-readable method name of a strategy identifier.
std::string method_label(std::string_view strategy);

}  // namespace compselect
