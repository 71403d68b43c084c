#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "framecmd/frames.hpp"
#include "framecmd/grammar.hpp"
#include "framecmd/llm.hpp"
#include "framecmd/validate.hpp"

namespace framecmd {

enum class PipelineMode {
  Hybrid,   // model output corrected through the validation loop
  LlmOnly,  // single completion, no validation gate
  NluOnly,  // grammar parse, no model at all
};

enum class RunOutcome {
  ValidCommand,
  EmptyFallback,  // no usable command; frames is empty
};

/// One model round trip. prompt is absent for NLU-only runs.
struct Attempt {
  std::optional<ChatPrompt> prompt;
  std::string raw_response;
  ValidationReport report;
};

struct PipelineResult {
  FrameSet frames;
  RunOutcome outcome = RunOutcome::EmptyFallback;
  int attempts_used = 0;
  std::vector<Attempt> transcript;
};

struct PipelineConfig {
  int max_attempts = 3;  // total completions per sentence, initial one included
  PipelineMode mode = PipelineMode::Hybrid;
  DecodingParams decoding;
  std::optional<bool> filter_enabled;  // overrides the schema's setting when set
};

/// Model-plus-validator loop: prompt, extract, canonicalize, validate, and
/// feed errors back until the command passes strict validation or the
/// attempt budget runs out. A blank sentence short-circuits to
/// EmptyFallback with no model call. Transport failures propagate.
PipelineResult run_hybrid(const std::string& sentence, Backend& backend,
                          const FrameSchema& schema, const PipelineConfig& config);

/// One completion, lenient extraction, no validation loop. ValidCommand
/// exactly when a nonempty frame set could be extracted; the transcript's
/// report still records what strict validation would have said.
PipelineResult run_llm_only(const std::string& sentence, Backend& backend,
                            const FrameSchema& schema, const PipelineConfig& config);

/// Grammar-only path: tokenize, parse, read frames off the tree,
/// canonicalize, strict-validate. No backend, so the single transcript entry
/// has no prompt and raw_response holds the serialized frames.
PipelineResult run_nlu_only(const std::string& sentence, const Grammar& grammar,
                            const FrameSchema& schema, const PipelineConfig& config);

struct BackendConfig {
  std::string kind = "stub";  // "stub" | "replay" | "http"
  std::string replay_path;    // replay only
  HttpBackendConfig http;     // http only
};

struct RunConfig {
  std::string grammar_path;
  std::string schema_path;
  PipelineConfig pipeline;
  BackendConfig backend;
};

/// Reads a JSON run-config file; absent fields keep their defaults.
/// Throws ConfigError on unreadable files, bad JSON, or unknown backend kinds.
RunConfig load_run_config_file(const std::string& path);

/// Instantiates the configured backend. Throws ConfigError for unknown kinds
/// and for http configs with an unusable URL.
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace framecmd
