#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "framecmd/frames.hpp"
#include "framecmd/pipeline.hpp"

namespace framecmd {

/// Malformed corpus file; line() is the 1-based offending line.
class CorpusError : public Error {
 public:
  CorpusError(const std::string& message, std::size_t line) : Error(message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct CorpusRecord {
  std::size_t id = 0;  // 1-based line number in the corpus file
  std::string instruction;
  FrameSet reference;
};

/// Reads JSON-lines records {"instruction": ..., "output": ...} where output
/// is either a frame-set object or its serialized text. Blank lines are
/// skipped. Throws CorpusError.
std::vector<CorpusRecord> load_corpus(const std::string& path);
std::vector<CorpusRecord> load_corpus_text(std::string_view text);

struct SplitResult {
  std::vector<CorpusRecord> test;
  std::vector<CorpusRecord> train;
};

/// Seeded shuffle split. The test side gets ceil(n * test_fraction) records;
/// identical seed and input give an identical split on every platform.
/// test_fraction must lie in (0, 1).
SplitResult split_corpus(const std::vector<CorpusRecord>& records, double test_fraction,
                         std::uint64_t seed);

/// Frame sequence equality in order; element sets compared without order.
bool exact_match(const FrameSet& predicted, const FrameSet& reference);

/// Jaccard similarity of the kv_pairs() sets. Both empty compare as 1.0,
/// exactly one empty as 0.0.
double json_similarity(const FrameSet& predicted, const FrameSet& reference);

struct RecordResult {
  std::size_t id = 0;
  RunOutcome outcome = RunOutcome::EmptyFallback;
  bool exact = false;
  double similarity = 0.0;  // flat 0 for failed records, by the averaging convention
  int attempts = 0;
  FrameSet predicted;

  bool operator==(const RecordResult&) const = default;
};

struct SimilarityQuartiles {
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;

  bool operator==(const SimilarityQuartiles&) const = default;
};

struct EvalReport {
  std::size_t total = 0;
  std::size_t success_count = 0;  // runs that produced a command
  std::size_t em_count = 0;
  std::size_t failed_count = 0;
  double success_rate = 0.0;
  double em_rate = 0.0;
  double em_rate_over_successes = 0.0;
  double failed_rate = 0.0;
  double mean_similarity = 0.0;      // over successes, 0 when there are none
  double mean_similarity_all = 0.0;  // failures counted as 0 similarity
  double bucket_threshold = 0.75;
  std::size_t bucket_exact = 0;
  std::size_t bucket_high = 0;  // similarity >= threshold without exact match
  std::size_t bucket_low = 0;   // produced a command, similarity < threshold
  std::size_t bucket_failed = 0;
  std::optional<SimilarityQuartiles> quartiles;  // over successes; absent when none
  std::vector<std::string> notes;
  std::vector<RecordResult> per_record;  // corpus order

  bool operator==(const EvalReport&) const = default;
};

struct EvalOptions {
  double bucket_threshold = 0.75;
  int jobs = 1;  // >1 requires a runner safe to call concurrently
};

using PipelineRunner = std::function<PipelineResult(const CorpusRecord&)>;

/// Runs every record through the runner and aggregates. With jobs > 1 the
/// records are processed by a worker pool and folded back in corpus order,
/// so the report is identical to a sequential run.
EvalReport evaluate(const std::vector<CorpusRecord>& records, const PipelineRunner& runner,
                    const EvalOptions& options);

enum class ReportFormat { Table, Csv, Json };

/// Table: the four headline percentages. Csv: one row per record. Json: the
/// full report, deterministically formatted.
std::string render_report(const EvalReport& report, ReportFormat format);

/// Rebuilds a report from render_report(..., Json) output (per-record
/// predictions included). Throws Error on malformed input.
EvalReport eval_report_from_json(std::string_view text);

}  // namespace framecmd
