#include "framecmd/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace framecmd {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kEmptyPopulationNote =
    "mean similarity has an empty population (no successful outputs); reported as 0";

// Locale-independent fixed-point rendering; snprintf("%f") is not, and the
// report bytes are golden-tested.
std::string fixed(double value, int precision) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                 std::chars_format::fixed, precision);
  return ec == std::errc() ? std::string(buffer, end) : std::string("nan");
}

FrameSet reference_from(const ordered_json& output, std::size_t line) {
  std::vector<std::string> sink;
  try {
    if (output.is_string()) return deserialize(output.get<std::string>(), sink);
    if (output.is_object()) return deserialize(output.dump(), sink);
  } catch (const DeserializeError& e) {
    throw CorpusError("line " + std::to_string(line) + ": bad output field: " + e.what(), line);
  }
  throw CorpusError("line " + std::to_string(line) + ": output must be JSON text or an object",
                    line);
}

}  // namespace

std::vector<CorpusRecord> load_corpus_text(std::string_view text) {
  std::vector<CorpusRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;
    bool only_space = true;
    for (char c : line)
      if (c != ' ' && c != '\t' && c != '\r') {
        only_space = false;
        break;
      }
    if (only_space) {
      if (pos > text.size()) break;
      continue;
    }

    ordered_json doc = ordered_json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
      throw CorpusError("line " + std::to_string(line_no) + ": not a JSON object", line_no);
    if (!doc.contains("instruction") || !doc["instruction"].is_string())
      throw CorpusError("line " + std::to_string(line_no) + ": missing instruction field",
                        line_no);
    if (!doc.contains("output"))
      throw CorpusError("line " + std::to_string(line_no) + ": missing output field", line_no);

    CorpusRecord record;
    record.id = line_no;
    record.instruction = doc["instruction"].get<std::string>();
    if (record.instruction.empty())
      throw CorpusError("line " + std::to_string(line_no) + ": empty instruction", line_no);
    record.reference = reference_from(doc["output"], line_no);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<CorpusRecord> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file: " + path, 0);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_corpus_text(buffer.str());
}

SplitResult split_corpus(const std::vector<CorpusRecord>& records, double test_fraction,
                         std::uint64_t seed) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    throw Error("test_fraction must be in (0, 1)");
  std::vector<CorpusRecord> shuffled = records;
  // hand-rolled Fisher-Yates: std::shuffle's draw sequence is
  // implementation-defined, and splits must match across platforms
  std::mt19937_64 gen(seed);
  for (std::size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[gen() % i]);
  const auto test_size = static_cast<std::size_t>(
      std::ceil(static_cast<double>(records.size()) * test_fraction));
  SplitResult split;
  split.test.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(test_size));
  split.train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(test_size), shuffled.end());
  return split;
}

bool exact_match(const FrameSet& predicted, const FrameSet& reference) {
  if (predicted.frames.size() != reference.frames.size()) return false;
  for (std::size_t i = 0; i < predicted.frames.size(); ++i) {
    const FrameInstance& p = predicted.frames[i];
    const FrameInstance& r = reference.frames[i];
    if (p.name != r.name) return false;
    std::set<std::pair<std::string, std::string>> pe(p.elements.begin(), p.elements.end());
    std::set<std::pair<std::string, std::string>> re(r.elements.begin(), r.elements.end());
    if (pe != re) return false;
  }
  return true;
}

double json_similarity(const FrameSet& predicted, const FrameSet& reference) {
  std::vector<std::string> a = kv_pairs(predicted);
  std::vector<std::string> b = kv_pairs(reference);
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const std::size_t unions = a.size() + b.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(unions);
}

EvalReport evaluate(const std::vector<CorpusRecord>& records, const PipelineRunner& runner,
                    const EvalOptions& options) {
  if (records.empty()) throw Error("evaluate needs at least one record");
  if (!(options.bucket_threshold >= 0.0 && options.bucket_threshold <= 1.0))
    throw Error("bucket_threshold must be in [0, 1]");

  std::vector<RecordResult> results(records.size());
  const int jobs = std::max(1, options.jobs);
  auto work = [&](const CorpusRecord& record) {
    PipelineResult run = runner(record);
    RecordResult out;
    out.id = record.id;
    out.attempts = run.attempts_used;
    out.predicted = run.frames;
    out.outcome = run.outcome;
    if (run.outcome == RunOutcome::ValidCommand) {
      out.exact = exact_match(run.frames, record.reference);
      out.similarity = json_similarity(run.frames, record.reference);
    }
    return out;
  };

  if (jobs == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) results[i] = work(records[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) {
        try {
          results[i] = work(records[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  EvalReport report;
  report.total = records.size();
  report.bucket_threshold = options.bucket_threshold;
  report.per_record = std::move(results);
  std::vector<double> success_sims;
  double sim_sum = 0.0;
  for (const RecordResult& r : report.per_record) {
    if (r.outcome == RunOutcome::ValidCommand) {
      ++report.success_count;
      success_sims.push_back(r.similarity);
      sim_sum += r.similarity;
      if (r.exact) {
        ++report.em_count;
        ++report.bucket_exact;
      } else if (r.similarity >= options.bucket_threshold) {
        ++report.bucket_high;
      } else {
        ++report.bucket_low;
      }
    } else {
      ++report.failed_count;
      ++report.bucket_failed;
    }
  }
  const auto total = static_cast<double>(report.total);
  report.success_rate = static_cast<double>(report.success_count) / total;
  report.em_rate = static_cast<double>(report.em_count) / total;
  report.failed_rate = static_cast<double>(report.failed_count) / total;
  report.mean_similarity_all = sim_sum / total;
  if (report.success_count > 0) {
    report.em_rate_over_successes =
        static_cast<double>(report.em_count) / static_cast<double>(report.success_count);
    report.mean_similarity = sim_sum / static_cast<double>(report.success_count);
    std::sort(success_sims.begin(), success_sims.end());
    auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(success_sims.size() - 1);
      const auto lo = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(lo);
      if (lo + 1 >= success_sims.size()) return success_sims[lo];
      return success_sims[lo] + (success_sims[lo + 1] - success_sims[lo]) * frac;
    };
    report.quartiles = SimilarityQuartiles{quantile(0.25), quantile(0.5), quantile(0.75)};
  } else {
    report.notes.push_back(kEmptyPopulationNote);
  }
  return report;
}

namespace {

const char* outcome_name(RunOutcome outcome) {
  return outcome == RunOutcome::ValidCommand ? "success" : "failed";
}

ordered_json frames_json(const FrameSet& frames) {
  return ordered_json::parse(serialize(frames));
}

std::string render_table(const EvalReport& report) {
  const char* headers[] = {"Success Output", "Exact Match", "JSON Similarity", "Failed Output"};
  const double values[] = {report.success_rate * 100.0, report.em_rate * 100.0,
                           report.mean_similarity * 100.0, report.failed_rate * 100.0};
  std::ostringstream os;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) os << "  ";
    os << headers[i];
  }
  os << "\n";
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) os << "  ";
    std::string cell = fixed(values[i], 2);
    std::size_t width = std::string(headers[i]).size();
    if (cell.size() < width) os << std::string(width - cell.size(), ' ');
    os << cell;
  }
  os << "\n";
  return os.str();
}

std::string render_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "id,outcome,exact_match,similarity,attempts\n";
  for (const RecordResult& r : report.per_record)
    os << r.id << "," << outcome_name(r.outcome) << "," << (r.exact ? 1 : 0) << ","
       << fixed(r.similarity, 4) << "," << r.attempts << "\n";
  return os.str();
}

std::string render_json(const EvalReport& report) {
  ordered_json doc;
  doc["total"] = report.total;
  doc["success_count"] = report.success_count;
  doc["em_count"] = report.em_count;
  doc["failed_count"] = report.failed_count;
  doc["success_rate"] = report.success_rate;
  doc["em_rate"] = report.em_rate;
  doc["em_rate_over_successes"] = report.em_rate_over_successes;
  doc["failed_rate"] = report.failed_rate;
  doc["mean_similarity"] = report.mean_similarity;
  doc["mean_similarity_all"] = report.mean_similarity_all;
  doc["bucket_threshold"] = report.bucket_threshold;
  doc["buckets"] = {{"exact_match", report.bucket_exact},
                    {"sim_at_least_threshold", report.bucket_high},
                    {"sim_below_threshold", report.bucket_low},
                    {"failed", report.bucket_failed}};
  if (report.quartiles) {
    doc["similarity_quartiles"] = {{"q25", report.quartiles->q25},
                                   {"median", report.quartiles->median},
                                   {"q75", report.quartiles->q75}};
  } else {
    doc["similarity_quartiles"] = nullptr;
  }
  doc["notes"] = report.notes;
  doc["per_record"] = ordered_json::array();
  for (const RecordResult& r : report.per_record) {
    ordered_json row;
    row["id"] = r.id;
    row["outcome"] = outcome_name(r.outcome);
    row["exact_match"] = r.exact;
    row["similarity"] = r.similarity;
    row["attempts"] = r.attempts;
    row["predicted"] = frames_json(r.predicted);
    doc["per_record"].push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: return render_table(report);
    case ReportFormat::Csv: return render_csv(report);
    case ReportFormat::Json: return render_json(report);
  }
  return {};
}

EvalReport eval_report_from_json(std::string_view text) {
  ordered_json doc = ordered_json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error("eval report is not a JSON object");
  try {
    EvalReport report;
    report.total = doc.at("total").get<std::size_t>();
    report.success_count = doc.at("success_count").get<std::size_t>();
    report.em_count = doc.at("em_count").get<std::size_t>();
    report.failed_count = doc.at("failed_count").get<std::size_t>();
    report.success_rate = doc.at("success_rate").get<double>();
    report.em_rate = doc.at("em_rate").get<double>();
    report.em_rate_over_successes = doc.at("em_rate_over_successes").get<double>();
    report.failed_rate = doc.at("failed_rate").get<double>();
    report.mean_similarity = doc.at("mean_similarity").get<double>();
    report.mean_similarity_all = doc.at("mean_similarity_all").get<double>();
    report.bucket_threshold = doc.at("bucket_threshold").get<double>();
    const auto& buckets = doc.at("buckets");
    report.bucket_exact = buckets.at("exact_match").get<std::size_t>();
    report.bucket_high = buckets.at("sim_at_least_threshold").get<std::size_t>();
    report.bucket_low = buckets.at("sim_below_threshold").get<std::size_t>();
    report.bucket_failed = buckets.at("failed").get<std::size_t>();
    if (!doc.at("similarity_quartiles").is_null()) {
      const auto& q = doc.at("similarity_quartiles");
      report.quartiles = SimilarityQuartiles{q.at("q25").get<double>(),
                                             q.at("median").get<double>(),
                                             q.at("q75").get<double>()};
    }
    for (const auto& note : doc.at("notes")) report.notes.push_back(note.get<std::string>());
    for (const auto& row : doc.at("per_record")) {
      RecordResult r;
      r.id = row.at("id").get<std::size_t>();
      r.outcome = row.at("outcome").get<std::string>() == "success" ? RunOutcome::ValidCommand
                                                                    : RunOutcome::EmptyFallback;
      r.exact = row.at("exact_match").get<bool>();
      r.similarity = row.at("similarity").get<double>();
      r.attempts = row.at("attempts").get<int>();
      std::vector<std::string> sink;
      r.predicted = deserialize(row.at("predicted").dump(), sink);
      report.per_record.push_back(std::move(r));
    }
    return report;
  } catch (const ordered_json::exception& e) {
    throw Error(std::string("eval report is missing fields: ") + e.what());
  }
}

}  // namespace framecmd
