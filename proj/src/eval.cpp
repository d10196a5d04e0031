#include "compselect/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <json.hpp>
#include <sstream>

#include "compselect/error.hpp"
#include "compselect/text.hpp"

namespace compselect {

using nlohmann::json;

namespace {

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

double f_measure(double overlap, double pred_total, double ref_total) {
  if (overlap == 0.0) return 0.0;
  const double p = overlap / pred_total;
  const double r = overlap / ref_total;
  return 2.0 * p * r / (p + r);
}

double rouge_n(const std::vector<std::string>& pred, const std::vector<std::string>& ref, std::size_t n) {
  const auto pc = ngram_counts(pred, n);
  const auto rc = ngram_counts(ref, n);
  if (pc.empty() || rc.empty()) return pred == ref ? 1.0 : 0.0;
  double overlap = 0.0, pred_total = 0.0, ref_total = 0.0;
  for (const auto& [g, c] : pc) pred_total += c;
  for (const auto& [g, c] : rc) {
    ref_total += c;
    if (auto it = pc.find(g); it != pc.end()) overlap += std::min(c, it->second);
  }
  return f_measure(overlap, pred_total, ref_total);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t total_tokens(const std::vector<std::string>& texts) {
  std::size_t n = 0;
  for (const auto& t : texts) n += tokenize(t, TokenMode::raw).size();
  return n;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_bool(const std::optional<bool>& b) {
  if (!b) return "";
  return *b ? "1" : "0";
}

std::string percent(std::optional<double> v) { return v ? fixed(*v * 100.0, 2) : "-"; }

std::string cr_cell(const std::optional<double>& cr) { return cr ? fixed(*cr, 2) + "\xC3\x97" : "-"; }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

RatioStatus ratio_status_from(const std::string& s) {
  if (s == "ok") return RatioStatus::ok;
  if (s == "infinite") return RatioStatus::infinite;
  return RatioStatus::undefined;
}

json rouge_json(const RougeScores& r) { return {{"rouge1", r.rouge1}, {"rouge2", r.rouge2}, {"rougeL", r.rougeL}}; }

}  // namespace

int subem(std::string_view prediction, const std::vector<std::string>& answers) {
  if (answers.empty()) throw PreconditionError("subem needs gold answers");
  return contains_any_answer(prediction, answers) ? 1 : 0;
}

double token_f1(std::string_view prediction, const std::vector<std::string>& answers) {
  if (answers.empty()) throw PreconditionError("token_f1 needs gold answers");
  const auto pred = tokenize(prediction, TokenMode::metric);
  double best = 0.0;
  for (const auto& answer : answers) {
    const auto gold = tokenize(answer, TokenMode::metric);
    double f1 = 0.0;
    if (pred.empty() || gold.empty()) {
      f1 = pred.empty() && gold.empty() ? 1.0 : 0.0;
    } else {
      std::map<std::string, int> counts;
      for (const auto& t : gold) ++counts[t];
      double common = 0.0;
      for (const auto& t : pred) {
        if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
          --it->second;
          common += 1.0;
        }
      }
      f1 = f_measure(common, static_cast<double>(pred.size()), static_cast<double>(gold.size()));
    }
    best = std::max(best, f1);
  }
  return best;
}

RougeScores rouge(std::string_view prediction, std::string_view reference) {
  const auto pred = tokenize(prediction, TokenMode::raw);
  const auto ref = tokenize(reference, TokenMode::raw);
  RougeScores s;
  s.rouge1 = rouge_n(pred, ref, 1);
  s.rouge2 = rouge_n(pred, ref, 2);
  if (pred.empty() || ref.empty()) {
    s.rougeL = pred == ref ? 1.0 : 0.0;
  } else {
    s.rougeL = f_measure(static_cast<double>(lcs_length(pred, ref)), static_cast<double>(pred.size()),
                         static_cast<double>(ref.size()));
  }
  return s;
}

RougeScores rouge_max(std::string_view prediction, const std::vector<std::string>& references) {
  RougeScores best;
  for (const auto& r : references) {
    const auto s = rouge(prediction, r);
    best.rouge1 = std::max(best.rouge1, s.rouge1);
    best.rouge2 = std::max(best.rouge2, s.rouge2);
    best.rougeL = std::max(best.rougeL, s.rougeL);
  }
  return best;
}

std::string_view to_string(RatioStatus status) {
  switch (status) {
    case RatioStatus::ok: return "ok";
    case RatioStatus::infinite: return "infinite";
    case RatioStatus::undefined: return "undefined";
  }
  return "undefined";
}

CompressionRatio compression_ratio(const std::vector<std::string>& original,
                                   const std::vector<std::string>& compressed) {
  const auto orig = total_tokens(original);
  if (orig == 0) return {RatioStatus::undefined, 0.0};
  const auto comp = total_tokens(compressed);
  if (comp == 0) return {RatioStatus::infinite, 0.0};
  return {RatioStatus::ok, static_cast<double>(orig) / static_cast<double>(comp)};
}

Latency latency_accounting(const std::vector<StageTiming>& timings) {
  Latency l;
  for (const auto& t : timings) {
    if (t.ms < 0.0) throw MeasurementError("negative timing for stage " + t.stage);
    if (t.stage == "generate") {
      l.online_ms += t.ms;
    } else if (t.stage == "extract" || t.stage == "rerank" || t.stage == "truncate") {
      l.offline_ms += t.ms;
    } else {
      throw PreconditionError("unknown stage label " + t.stage);
    }
  }
  l.total_ms = l.offline_ms + l.online_ms;
  return l;
}

// ---------------------------------------------------------------------------

Aggregate aggregate(const std::vector<SampleRecord>& records) {
  Aggregate a;
  a.samples = records.size();
  if (records.empty()) return a;
  const double n = static_cast<double>(records.size());
  double cr_sum = 0.0;
  std::size_t cr_n = 0;
  double r1 = 0, h2 = 0, r3 = 0;
  std::size_t r1_n = 0, h2_n = 0, r3_n = 0;
  for (const auto& r : records) {
    a.subem += r.subem;
    a.f1 += r.f1;
    a.rouge.rouge1 += r.rouge.rouge1;
    a.rouge.rouge2 += r.rouge.rouge2;
    a.rouge.rougeL += r.rouge.rougeL;
    a.tokens_in += static_cast<double>(r.tokens_in);
    a.tokens_out += static_cast<double>(r.tokens_out);
    a.total_latency_ms += r.total_latency_ms;
    a.offline_latency_ms += r.offline_latency_ms;
    a.online_latency_ms += r.online_latency_ms;
    switch (r.cr_status) {
      case RatioStatus::ok: cr_sum += r.cr; ++cr_n; break;
      case RatioStatus::infinite: ++a.cr_infinite; break;
      case RatioStatus::undefined: ++a.cr_undefined; break;
    }
    if (r.recall1) { r1 += *r.recall1; ++r1_n; }
    if (r.hit2at1) { h2 += *r.hit2at1; ++h2_n; }
    if (r.recall3) { r3 += *r.recall3; ++r3_n; }
  }
  a.subem /= n;
  a.f1 /= n;
  a.rouge.rouge1 /= n;
  a.rouge.rouge2 /= n;
  a.rouge.rougeL /= n;
  a.tokens_in /= n;
  a.tokens_out /= n;
  a.total_latency_ms /= n;
  a.offline_latency_ms /= n;
  a.online_latency_ms /= n;
  if (cr_n > 0) a.cr = cr_sum / static_cast<double>(cr_n);
  if (r1_n > 0) a.recall1 = r1 / static_cast<double>(r1_n);
  if (h2_n > 0) a.hit2at1 = h2 / static_cast<double>(h2_n);
  if (r3_n > 0) a.recall3 = r3 / static_cast<double>(r3_n);
  return a;
}

std::string report_to_json(const EvalReport& report) {
  json per_sample = json::array();
  for (const auto& r : report.per_sample) {
    per_sample.push_back({{"sample_id", r.sample_id},
                          {"prediction", r.prediction},
                          {"subem", r.subem},
                          {"f1", r.f1},
                          {"rouge", rouge_json(r.rouge)},
                          {"cr_status", to_string(r.cr_status)},
                          {"cr", r.cr_status == RatioStatus::ok ? json(r.cr) : json(nullptr)},
                          {"tokens_in", r.tokens_in},
                          {"tokens_out", r.tokens_out},
                          {"total_latency_ms", r.total_latency_ms},
                          {"offline_latency_ms", r.offline_latency_ms},
                          {"online_latency_ms", r.online_latency_ms},
                          {"generation_cached", r.generation_cached},
                          {"recall1", opt_json(r.recall1)},
                          {"hit2at1", opt_json(r.hit2at1)},
                          {"recall3", opt_json(r.recall3)},
                          {"clue_count", opt_json(r.clue_count)},
                          {"prefix_length", opt_json(r.prefix_length)}});
  }
  const auto& a = report.summary;
  const json summary{{"samples", a.samples},
                     {"subem", a.subem},
                     {"f1", a.f1},
                     {"rouge", rouge_json(a.rouge)},
                     {"cr", opt_json(a.cr)},
                     {"cr_infinite", a.cr_infinite},
                     {"cr_undefined", a.cr_undefined},
                     {"tokens_in", a.tokens_in},
                     {"tokens_out", a.tokens_out},
                     {"total_latency_ms", a.total_latency_ms},
                     {"offline_latency_ms", a.offline_latency_ms},
                     {"online_latency_ms", a.online_latency_ms},
                     {"recall1", opt_json(a.recall1)},
                     {"hit2at1", opt_json(a.hit2at1)},
                     {"recall3", opt_json(a.recall3)}};
  json quarantined = json::array();
  for (const auto& q : report.quarantined) quarantined.push_back({{"sample_id", q.sample_id}, {"error", q.error}});
  const json j{{"schema_version", report.schema_version},
               {"strategy", report.strategy},
               {"dataset", report.dataset},
               {"config_fingerprint", report.config_fingerprint},
               {"aggregate", summary},
               {"per_sample", per_sample},
               {"quarantined", quarantined}};
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(0, "<report>", e.what());
  }
  const auto version = j.value("schema_version", std::string());
  if (version != kReportSchema) {
    throw SchemaMismatchError("report schema " + version + " is not " + std::string(kReportSchema));
  }
  try {
    EvalReport report;
    report.strategy = j.at("strategy").get<std::string>();
    report.dataset = j.at("dataset").get<std::string>();
    report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    auto rouge_of = [](const json& r) {
      return RougeScores{r.at("rouge1").get<double>(), r.at("rouge2").get<double>(), r.at("rougeL").get<double>()};
    };
    for (const auto& s : j.at("per_sample")) {
      SampleRecord r;
      r.sample_id = s.at("sample_id").get<std::string>();
      r.prediction = s.at("prediction").get<std::string>();
      r.subem = s.at("subem").get<int>();
      r.f1 = s.at("f1").get<double>();
      r.rouge = rouge_of(s.at("rouge"));
      r.cr_status = ratio_status_from(s.at("cr_status").get<std::string>());
      r.cr = s.at("cr").is_null() ? 0.0 : s.at("cr").get<double>();
      r.tokens_in = s.at("tokens_in").get<std::size_t>();
      r.tokens_out = s.at("tokens_out").get<std::size_t>();
      r.total_latency_ms = s.at("total_latency_ms").get<double>();
      r.offline_latency_ms = s.at("offline_latency_ms").get<double>();
      r.online_latency_ms = s.at("online_latency_ms").get<double>();
      r.generation_cached = s.at("generation_cached").get<bool>();
      r.recall1 = opt_from<bool>(s, "recall1");
      r.hit2at1 = opt_from<bool>(s, "hit2at1");
      r.recall3 = opt_from<bool>(s, "recall3");
      r.clue_count = opt_from<std::size_t>(s, "clue_count");
      r.prefix_length = opt_from<std::size_t>(s, "prefix_length");
      report.per_sample.push_back(std::move(r));
    }
    const auto& a = j.at("aggregate");
    auto& g = report.summary;
    g.samples = a.at("samples").get<std::size_t>();
    g.subem = a.at("subem").get<double>();
    g.f1 = a.at("f1").get<double>();
    g.rouge = rouge_of(a.at("rouge"));
    g.cr = opt_from<double>(a, "cr");
    g.cr_infinite = a.at("cr_infinite").get<std::size_t>();
    g.cr_undefined = a.at("cr_undefined").get<std::size_t>();
    g.tokens_in = a.at("tokens_in").get<double>();
    g.tokens_out = a.at("tokens_out").get<double>();
    g.total_latency_ms = a.at("total_latency_ms").get<double>();
    g.offline_latency_ms = a.at("offline_latency_ms").get<double>();
    g.online_latency_ms = a.at("online_latency_ms").get<double>();
    g.recall1 = opt_from<double>(a, "recall1");
    g.hit2at1 = opt_from<double>(a, "hit2at1");
    g.recall3 = opt_from<double>(a, "recall3");
    for (const auto& q : j.at("quarantined")) {
      report.quarantined.push_back({q.at("sample_id").get<std::string>(), q.at("error").get<std::string>()});
    }
    return report;
  } catch (const json::exception& e) {
    throw SchemaError(0, "<report>", e.what());
  }
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

std::string report_to_csv(const EvalReport& report) {
  std::string out =
      "sample_id,subem,f1,rouge1,rouge2,rougeL,cr_status,cr,tokens_in,tokens_out,total_latency_ms,"
      "offline_latency_ms,online_latency_ms,generation_cached,recall1,hit2at1,recall3,clue_count,"
      "prefix_length\n";
  for (const auto& r : report.per_sample) {
    out += csv_escape(r.sample_id) + "," + std::to_string(r.subem) + "," + fixed(r.f1, 6) + "," +
           fixed(r.rouge.rouge1, 6) + "," + fixed(r.rouge.rouge2, 6) + "," + fixed(r.rouge.rougeL, 6) + "," +
           std::string(to_string(r.cr_status)) + "," + (r.cr_status == RatioStatus::ok ? fixed(r.cr, 6) : "") +
           "," + std::to_string(r.tokens_in) + "," + std::to_string(r.tokens_out) + "," +
           fixed(r.total_latency_ms, 3) + "," + fixed(r.offline_latency_ms, 3) + "," +
           fixed(r.online_latency_ms, 3) + "," + (r.generation_cached ? "1" : "0") + "," +
           opt_bool(r.recall1) + "," + opt_bool(r.hit2at1) + "," + opt_bool(r.recall3) + "," +
           (r.clue_count ? std::to_string(*r.clue_count) : "") + "," +
           (r.prefix_length ? std::to_string(*r.prefix_length) : "") + "\n";
  }
  return out;
}

std::string method_label(std::string_view strategy) {
  static const std::map<std::string, std::string, std::less<>> kLabels = {
      {"naive", "Naive Generation"},
      {"full_content", "Full Content"},
      {"bm25", "BM25"},
      {"compselect", "CompSelect"},
      {"compselect_no_extractor", "CompSelect w/o clue extractor"},
      {"compselect_no_reranker", "CompSelect w/o clue reranker"},
      {"compselect_no_truncator", "CompSelect w/o adaptive truncator"},
      {"random_truncate", "CompSelect (random truncation)"}};
  if (auto it = kLabels.find(strategy); it != kLabels.end()) return it->second;
  return std::string(strategy);
}

std::string report_to_markdown(const EvalReport& report) {
  const auto& a = report.summary;
  const std::string ds = report.dataset.empty() ? "dataset" : report.dataset;
  std::string out = "| Method | " + ds + " SubEM | " + ds + " F1 | " + ds + " CR |\n";
  out += "|---|---|---|---|\n";
  out += "| " + method_label(report.strategy) + " | " + percent(a.subem) + " | " + percent(a.f1) + " | " +
         cr_cell(a.cr) + " |\n\n";
  out += "| Samples | Quarantined | CR infinite | Total latency (ms) | Online latency (ms) | "
         "ROUGE-1 | ROUGE-2 | ROUGE-L | Recall-1 | Hit-2@1 | Recall-3 |\n";
  out += "|---|---|---|---|---|---|---|---|---|---|---|\n";
  out += "| " + std::to_string(a.samples) + " | " + std::to_string(report.quarantined.size()) + " | " +
         std::to_string(a.cr_infinite) + " | " + fixed(a.total_latency_ms, 2) + " | " +
         fixed(a.online_latency_ms, 2) + " | " + fixed(a.rouge.rouge1, 4) + " | " + fixed(a.rouge.rouge2, 4) +
         " | " + fixed(a.rouge.rougeL, 4) + " | " + percent(a.recall1) + " | " + percent(a.hit2at1) + " | " +
         percent(a.recall3) + " |\n";
  return out;
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir,
                 const std::set<ReportFormat>& formats) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << content;
    if (!out) throw IoError("write failure on " + (dir / name).string());
  };
  if (formats.count(ReportFormat::json)) write("report.json", report_to_json(report));
  if (formats.count(ReportFormat::csv)) write("report.csv", report_to_csv(report));
  if (formats.count(ReportFormat::markdown)) write("report.md", report_to_markdown(report));
}

ComparisonTable compare_reports(const std::vector<EvalReport>& reports) {
  std::vector<std::string> methods, datasets;
  std::map<std::pair<std::string, std::string>, const Aggregate*> cells;
  for (const auto& r : reports) {
    if (r.schema_version != kReportSchema) {
      throw SchemaMismatchError("report schema " + r.schema_version + " is not " + std::string(kReportSchema));
    }
    if (std::find(methods.begin(), methods.end(), r.strategy) == methods.end()) methods.push_back(r.strategy);
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    cells[{r.strategy, r.dataset}] = &r.summary;
  }
  ComparisonTable t;
  t.markdown = "| Method |";
  std::string rule = "|---|";
  t.csv = "method";
  for (const auto& d : datasets) {
    t.markdown += " " + d + " SubEM | " + d + " F1 | " + d + " CR |";
    rule += "---|---|---|";
    t.csv += "," + csv_escape(d + " SubEM") + "," + csv_escape(d + " F1") + "," + csv_escape(d + " CR");
  }
  t.markdown += "\n" + rule + "\n";
  t.csv += "\n";
  for (const auto& m : methods) {
    t.markdown += "| " + method_label(m) + " |";
    t.csv += csv_escape(method_label(m));
    for (const auto& d : datasets) {
      auto it = cells.find({m, d});
      if (it == cells.end()) {
        t.markdown += " - | - | - |";
        t.csv += ",-,-,-";
        continue;
      }
      const auto& a = *it->second;
      const std::optional<double> cr = m == "naive" ? std::nullopt : a.cr;
      t.markdown += " " + percent(a.subem) + " | " + percent(a.f1) + " | " + cr_cell(cr) + " |";
      t.csv += "," + percent(a.subem) + "," + percent(a.f1) + "," + (cr ? fixed(*cr, 2) : "-");
    }
    t.markdown += "\n";
    t.csv += "\n";
  }
  return t;
}

}  // namespace compselect
