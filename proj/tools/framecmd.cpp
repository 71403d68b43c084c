#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "framecmd/earley.hpp"
#include "framecmd/eval.hpp"
#include "framecmd/frames.hpp"
#include "framecmd/grammar.hpp"
#include "framecmd/pipeline.hpp"
#include "framecmd/validate.hpp"

namespace {

using namespace framecmd;

constexpr const char* kDefaultGrammar = "assets/example.grammar";
constexpr const char* kDefaultSchema = "assets/schema.json";

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Grammar load_grammar_file(const std::string& path) {
  return load_grammar(read_file(path, "grammar"));
}

FrameSchema load_schema_file(const std::string& path) {
  return load_schema(read_file(path, "schema"));
}

PipelineMode mode_of(const std::string& name) {
  if (name == "hybrid") return PipelineMode::Hybrid;
  if (name == "llm") return PipelineMode::LlmOnly;
  if (name == "nlu") return PipelineMode::NluOnly;
  throw ConfigError("unknown mode \"" + name + "\"");
}

const char* status_word(ValidationStatus status) {
  switch (status) {
    case ValidationStatus::Valid: return "valid";
    case ValidationStatus::Salvaged: return "salvaged";
    case ValidationStatus::Invalid: return "invalid";
  }
  return "invalid";
}

void render_tree(const ParseTree& node, std::size_t depth, std::ostream& os) {
  os << std::string(depth * 2, ' ');
  if (node.is_leaf()) {
    if (node.symbol != node.covered_text) os << node.symbol << " ";
    os << "'" << node.covered_text << "'\n";
    return;
  }
  os << node.symbol << "\n";
  for (const ParseTree& child : node.children) render_tree(child, depth + 1, os);
}

void print_report(const ValidationReport& report, const std::vector<std::string>& extra_warnings,
                  std::ostream& os) {
  os << "status: " << status_word(report.status) << "\n";
  for (const ValidationError& error : report.errors) os << "error: " << error.message << "\n";
  for (const std::string& w : extra_warnings) os << "warning: " << w << "\n";
  for (const std::string& w : report.warnings) os << "warning: " << w << "\n";
}

void print_transcript(const PipelineResult& result, std::ostream& os) {
  for (std::size_t i = 0; i < result.transcript.size(); ++i) {
    const Attempt& attempt = result.transcript[i];
    os << "== attempt " << (i + 1) << " ==\n";
    os << "-- prompt --\n" << (attempt.prompt ? attempt.prompt->user : "(none)") << "\n";
    os << "-- response --\n" << attempt.raw_response << "\n";
    os << "-- report --\n";
    print_report(attempt.report, {}, os);
  }
}

struct RunFlags {
  std::string sentence;
  bool interactive = false;
  std::string config_path;
  std::string backend_kind;
  std::string transcript_path;
  int max_attempts = 0;
  std::string mode;
  bool verbose = false;
  bool quiet = false;
};

RunConfig effective_config(const std::string& config_path, const std::string& mode) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_run_config_file(config_path);
  if (!mode.empty()) cfg.pipeline.mode = mode_of(mode);
  if (cfg.grammar_path.empty()) cfg.grammar_path = kDefaultGrammar;
  if (cfg.schema_path.empty()) cfg.schema_path = kDefaultSchema;
  return cfg;
}

int cmd_parse(const std::string& sentence, const std::string& grammar_path,
              const std::string& schema_path, bool want_tree, bool quiet) {
  Grammar grammar = load_grammar_file(grammar_path);
  FrameSchema schema = load_schema_file(schema_path);
  PipelineConfig pc;
  pc.mode = PipelineMode::NluOnly;
  PipelineResult result = run_nlu_only(sentence, grammar, schema, pc);
  if (result.outcome != RunOutcome::ValidCommand) {
    if (!quiet && !result.transcript.empty())
      std::cerr << render_error_report(result.transcript.front().report, schema);
    return 1;
  }
  if (want_tree && !quiet) render_tree(parse(grammar, tokenize(sentence)), 0, std::cerr);
  std::cout << serialize(result.frames) << "\n";
  return 0;
}

int cmd_run(const RunFlags& flags) {
  RunConfig cfg = effective_config(flags.config_path, flags.mode);
  if (flags.max_attempts > 0) cfg.pipeline.max_attempts = flags.max_attempts;
  if (!flags.backend_kind.empty()) cfg.backend.kind = flags.backend_kind;
  if (!flags.transcript_path.empty()) {
    cfg.backend.replay_path = flags.transcript_path;
    if (flags.backend_kind.empty()) cfg.backend.kind = "replay";
  }

  FrameSchema schema = load_schema_file(cfg.schema_path);
  std::optional<Grammar> grammar;
  std::unique_ptr<Backend> backend;
  auto run_one = [&](const std::string& sentence) {
    if (cfg.pipeline.mode == PipelineMode::NluOnly) {
      if (!grammar) grammar = load_grammar_file(cfg.grammar_path);
      return run_nlu_only(sentence, *grammar, schema, cfg.pipeline);
    }
    if (!backend) backend = make_backend(cfg.backend);
    return cfg.pipeline.mode == PipelineMode::Hybrid
               ? run_hybrid(sentence, *backend, schema, cfg.pipeline)
               : run_llm_only(sentence, *backend, schema, cfg.pipeline);
  };

  if (flags.interactive) {
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      PipelineResult result = run_one(line);
      if (flags.verbose && !flags.quiet) print_transcript(result, std::cerr);
      std::cout << serialize(result.frames) << std::endl;
    }
    return 0;
  }

  PipelineResult result = run_one(flags.sentence);
  if (flags.verbose && !flags.quiet) print_transcript(result, std::cerr);
  std::cout << serialize(result.frames) << "\n";
  return result.outcome == RunOutcome::ValidCommand ? 0 : 1;
}

int cmd_validate(const std::string& json_text, const std::string& file_path,
                 const std::string& schema_path, const std::string& stage) {
  if (json_text.empty() == file_path.empty())
    throw ConfigError("validate needs JSON text or --file (exactly one)");
  const std::string text = file_path.empty() ? json_text : read_file(file_path, "input");
  FrameSchema schema = load_schema_file(schema_path);

  std::vector<std::string> warnings;
  FrameSet frames;
  try {
    frames = deserialize(text, warnings);
  } catch (const DeserializeError& e) {
    print_report(deserialize_failure_report(e), warnings, std::cout);
    return 1;
  }

  if (stage == "light") {
    LightResult light = validate_light(frames, schema);
    print_report(light.report, warnings, std::cout);
    std::cout << serialize(light.frames) << "\n";
    return light.report.status == ValidationStatus::Valid ? 0 : 1;
  }
  ValidationReport report = validate_strict(frames, schema);
  print_report(report, warnings, std::cout);
  return report.status == ValidationStatus::Valid ? 0 : 1;
}

struct EvalFlags {
  std::string corpus_path = "assets/mini_corpus.jsonl";
  std::string config_path;
  std::string mode;
  std::uint64_t split_seed = 42;
  double test_fraction = 0.1;
  std::string format = "table";
  std::string out_path;
  int jobs = 1;
  double bucket_threshold = 0.75;
  bool quiet = false;
};

int cmd_eval(const EvalFlags& flags) {
  RunConfig cfg = effective_config(flags.config_path, flags.mode);
  std::vector<CorpusRecord> records = load_corpus(flags.corpus_path);
  SplitResult split = split_corpus(records, flags.test_fraction, flags.split_seed);
  FrameSchema schema = load_schema_file(cfg.schema_path);

  EvalOptions options;
  options.bucket_threshold = flags.bucket_threshold;
  options.jobs = flags.jobs;

  std::optional<Grammar> grammar;
  std::unique_ptr<Backend> backend;
  PipelineRunner runner;
  if (cfg.pipeline.mode == PipelineMode::NluOnly) {
    grammar = load_grammar_file(cfg.grammar_path);
    runner = [&](const CorpusRecord& record) {
      return run_nlu_only(record.instruction, *grammar, schema, cfg.pipeline);
    };
  } else {
    backend = make_backend(cfg.backend);
    if (options.jobs > 1 && !backend->supports_concurrent_calls()) {
      if (!flags.quiet)
        std::cerr << "backend does not support concurrent calls; running with one job\n";
      options.jobs = 1;
    }
    const bool hybrid = cfg.pipeline.mode == PipelineMode::Hybrid;
    runner = [&, hybrid](const CorpusRecord& record) {
      return hybrid ? run_hybrid(record.instruction, *backend, schema, cfg.pipeline)
                    : run_llm_only(record.instruction, *backend, schema, cfg.pipeline);
    };
  }

  EvalReport report = evaluate(split.test, runner, options);
  ReportFormat format = flags.format == "json"  ? ReportFormat::Json
                        : flags.format == "csv" ? ReportFormat::Csv
                                                : ReportFormat::Table;
  std::string rendered = render_report(report, format);
  if (flags.out_path.empty()) {
    std::cout << rendered;
  } else {
    std::ofstream out(flags.out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + flags.out_path);
    out << rendered;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grammar-constrained natural-language command pipeline"};
  app.require_subcommand(1);

  std::string parse_sentence, parse_grammar = kDefaultGrammar, parse_schema = kDefaultSchema;
  bool parse_tree = false, parse_quiet = false;
  CLI::App* parse_cmd = app.add_subcommand("parse", "parse a sentence with the grammar only");
  parse_cmd->add_option("sentence", parse_sentence, "sentence to parse")->required();
  parse_cmd->add_option("--grammar", parse_grammar, "grammar file")->capture_default_str();
  parse_cmd->add_option("--schema", parse_schema, "schema file")->capture_default_str();
  parse_cmd->add_flag("--tree", parse_tree, "print the syntax tree to stderr");
  parse_cmd->add_flag("--quiet", parse_quiet, "suppress diagnostics");

  RunFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "run the full pipeline on a sentence");
  CLI::Option* run_sentence = run_cmd->add_option("sentence", run_flags.sentence, "input sentence");
  CLI::Option* run_inter =
      run_cmd->add_flag("--interactive", run_flags.interactive, "read sentences from stdin");
  run_sentence->excludes(run_inter);
  run_cmd->add_option("--config", run_flags.config_path, "run-config JSON file");
  run_cmd->add_option("--backend", run_flags.backend_kind, "backend kind")
      ->check(CLI::IsMember({"stub", "replay", "http"}));
  run_cmd->add_option("--transcript", run_flags.transcript_path, "replay transcript file");
  run_cmd->add_option("--max-attempts", run_flags.max_attempts, "completion budget per sentence");
  run_cmd->add_option("--mode", run_flags.mode, "pipeline mode")
      ->check(CLI::IsMember({"hybrid", "llm", "nlu"}));
  run_cmd->add_flag("--verbose", run_flags.verbose, "print the attempt transcript to stderr");
  run_cmd->add_flag("--quiet", run_flags.quiet, "suppress diagnostics");

  std::string val_json, val_file, val_schema = kDefaultSchema, val_stage = "strict";
  bool val_quiet = false;
  CLI::App* val_cmd = app.add_subcommand("validate", "validate frame JSON against the schema");
  val_cmd->add_option("json", val_json, "frame JSON text");
  val_cmd->add_option("--file", val_file, "read frame JSON from a file");
  val_cmd->add_option("--schema", val_schema, "schema file")->capture_default_str();
  val_cmd->add_option("--stage", val_stage, "validation stage")->capture_default_str()
      ->check(CLI::IsMember({"light", "strict"}));
  val_cmd->add_flag("--quiet", val_quiet, "suppress diagnostics");

  EvalFlags eval_flags;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a corpus and print a report");
  eval_cmd->add_option("--corpus", eval_flags.corpus_path, "corpus JSONL file")->capture_default_str();
  eval_cmd->add_option("--config", eval_flags.config_path, "run-config JSON file");
  eval_cmd->add_option("--mode", eval_flags.mode, "pipeline mode")
      ->check(CLI::IsMember({"hybrid", "llm", "nlu"}));
  eval_cmd->add_option("--split-seed", eval_flags.split_seed, "shuffle seed")->capture_default_str();
  eval_cmd->add_option("--test-fraction", eval_flags.test_fraction, "test split fraction")->capture_default_str();
  eval_cmd->add_option("--format", eval_flags.format, "report format")->capture_default_str()
      ->check(CLI::IsMember({"table", "json", "csv"}));
  eval_cmd->add_option("--out", eval_flags.out_path, "write the report to a file");
  eval_cmd->add_option("--jobs", eval_flags.jobs, "parallel evaluation jobs")->capture_default_str();
  eval_cmd->add_option("--bucket-threshold", eval_flags.bucket_threshold,
                       "similarity bucket boundary")
      ->capture_default_str();
  eval_cmd->add_flag("--quiet", eval_flags.quiet, "suppress notices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (parse_cmd->parsed())
      return cmd_parse(parse_sentence, parse_grammar, parse_schema, parse_tree, parse_quiet);
    if (run_cmd->parsed()) {
      if (!run_flags.interactive && run_sentence->count() == 0)
        throw ConfigError("run needs a sentence or --interactive");
      return cmd_run(run_flags);
    }
    if (val_cmd->parsed()) return cmd_validate(val_json, val_file, val_schema, val_stage);
    if (eval_cmd->parsed()) return cmd_eval(eval_flags);
  } catch (const TransportError& e) {
    std::cerr << "framecmd: " << e.what() << "\n";
    return 3;
  } catch (const TranscriptExhausted& e) {
    std::cerr << "framecmd: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "framecmd: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
