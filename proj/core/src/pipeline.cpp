#include "framecmd/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "framecmd/canonicalize.hpp"
#include "framecmd/earley.hpp"
#include "json.hpp"

namespace framecmd {
namespace {

bool blank(const std::string& text) {
  for (char c : text)
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
  return true;
}

void require(const PipelineConfig& config, PipelineMode mode, const char* name) {
  if (config.mode != mode) throw ConfigError(std::string("config mode is not ") + name);
  if (config.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

ValidationReport no_parse_report(const NoParseError& error) {
  ValidationReport report;
  report.stage = ValidationStage::Strict;
  report.status = ValidationStatus::Invalid;
  ValidationError e;
  e.kind = ErrorKind::MalformedStructure;
  e.subject = error.what();
  e.message = error.what();
  report.errors.push_back(std::move(e));
  return report;
}

}  // namespace

PipelineResult run_hybrid(const std::string& sentence, Backend& backend,
                          const FrameSchema& schema, const PipelineConfig& config) {
  require(config, PipelineMode::Hybrid, "hybrid");
  PipelineResult result;
  if (blank(sentence)) return result;  // nothing to ask the model

  const bool filter_on = config.filter_enabled.value_or(schema.filter_enabled);
  ChatPrompt prompt = build_initial_prompt(sentence, schema);
  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    std::string raw = backend.complete(prompt, config.decoding);
    Attempt entry;
    entry.prompt = prompt;
    entry.raw_response = raw;

    std::optional<FrameSet> accepted;
    std::vector<std::string> warnings;
    try {
      FrameSet extracted = deserialize(raw, warnings);
      FrameSet canonical = canonicalize(extracted, schema, filter_on, warnings);
      LightResult light = validate_light(canonical, schema);
      light.report.warnings.insert(light.report.warnings.begin(), warnings.begin(),
                                   warnings.end());
      entry.report = light.report;
      if (light.report.status != ValidationStatus::Invalid && !light.frames.empty() &&
          validate_strict(light.frames, schema).ok())
        accepted = std::move(light.frames);
    } catch (const DeserializeError& e) {
      entry.report = deserialize_failure_report(e);
    }

    result.transcript.push_back(entry);
    result.attempts_used = attempt;
    if (accepted) {
      result.frames = std::move(*accepted);
      result.outcome = RunOutcome::ValidCommand;
      return result;
    }
    if (attempt == config.max_attempts) break;
    std::string rendered = render_error_report(entry.report, schema);
    prompt = build_feedback_prompt(sentence, raw.empty() ? "(empty response)" : raw, rendered,
                                   schema);
  }
  result.outcome = RunOutcome::EmptyFallback;
  return result;
}

PipelineResult run_llm_only(const std::string& sentence, Backend& backend,
                            const FrameSchema& schema, const PipelineConfig& config) {
  require(config, PipelineMode::LlmOnly, "llm_only");
  PipelineResult result;
  if (blank(sentence)) return result;

  ChatPrompt prompt = build_initial_prompt(sentence, schema);
  Attempt entry;
  entry.prompt = prompt;
  entry.raw_response = backend.complete(prompt, config.decoding);
  result.attempts_used = 1;

  std::vector<std::string> warnings;
  try {
    FrameSet extracted = deserialize(entry.raw_response, warnings);
    // informational only: this mode never gates on validity
    entry.report = validate_strict(extracted, schema);
    entry.report.warnings.insert(entry.report.warnings.begin(), warnings.begin(), warnings.end());
    if (!extracted.empty()) {
      result.frames = std::move(extracted);
      result.outcome = RunOutcome::ValidCommand;
    }
  } catch (const DeserializeError& e) {
    entry.report = deserialize_failure_report(e);
  }
  result.transcript.push_back(std::move(entry));
  return result;
}

PipelineResult run_nlu_only(const std::string& sentence, const Grammar& grammar,
                            const FrameSchema& schema, const PipelineConfig& config) {
  require(config, PipelineMode::NluOnly, "nlu_only");
  PipelineResult result;
  result.attempts_used = 1;
  const bool filter_on = config.filter_enabled.value_or(schema.filter_enabled);

  Attempt entry;  // no prompt: nothing was asked of a model
  try {
    ParseTree tree = parse(grammar, tokenize(sentence));
    std::vector<std::string> warnings;
    FrameSet canonical = canonicalize(tree_to_frames(grammar, tree), schema, filter_on, warnings);
    entry.raw_response = serialize(canonical);
    entry.report = validate_strict(canonical, schema);
    entry.report.warnings.insert(entry.report.warnings.begin(), warnings.begin(), warnings.end());
    if (entry.report.ok() && !canonical.empty()) {
      result.frames = std::move(canonical);
      result.outcome = RunOutcome::ValidCommand;
    }
  } catch (const NoParseError& e) {
    entry.report = no_parse_report(e);
  }
  result.transcript.push_back(std::move(entry));
  return result;
}

namespace {

using ordered_json = nlohmann::ordered_json;

DecodingParams decoding_from(const ordered_json& doc) {
  DecodingParams params;
  for (const auto& [key, value] : doc.items()) {
    if (key == "max_new_tokens" && value.is_number_integer())
      params.max_new_tokens = value.get<int>();
    else if (key == "temperature" && value.is_number())
      params.temperature = value.get<double>();
    else if (key == "top_p" && value.is_number())
      params.top_p = value.get<double>();
    else if (key == "repetition_penalty" && value.is_number())
      params.repetition_penalty = value.get<double>();
    else
      throw ConfigError("bad decoding setting \"" + key + "\"");
  }
  if (params.max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
  if (params.temperature < 0) throw ConfigError("temperature must be >= 0");
  if (params.top_p <= 0 || params.top_p > 1) throw ConfigError("top_p must be in (0, 1]");
  if (params.repetition_penalty < 1) throw ConfigError("repetition_penalty must be >= 1");
  return params;
}

BackendConfig backend_from(const ordered_json& doc) {
  BackendConfig backend;
  for (const auto& [key, value] : doc.items()) {
    if (key == "kind" && value.is_string())
      backend.kind = value.get<std::string>();
    else if (key == "path" && value.is_string())
      backend.replay_path = value.get<std::string>();
    else if (key == "base_url" && value.is_string())
      backend.http.base_url = value.get<std::string>();
    else if (key == "endpoint_path" && value.is_string())
      backend.http.path = value.get<std::string>();
    else if (key == "model" && value.is_string())
      backend.http.model = value.get<std::string>();
    else if (key == "timeout_ms" && value.is_number_integer())
      backend.http.timeout_ms = value.get<int>();
    else if (key == "max_request_attempts" && value.is_number_integer())
      backend.http.max_request_attempts = value.get<int>();
    else if (key == "backoff_initial_ms" && value.is_number_integer())
      backend.http.backoff_initial_ms = value.get<int>();
    else if (key == "auth_env" && value.is_string())
      backend.http.auth_env = value.get<std::string>();
    else if (key == "max_in_flight" && value.is_number_integer())
      backend.http.max_in_flight = value.get<int>();
    else
      throw ConfigError("bad backend setting \"" + key + "\"");
  }
  if (backend.kind != "stub" && backend.kind != "replay" && backend.kind != "http")
    throw ConfigError("unknown backend kind \"" + backend.kind + "\"");
  if (backend.kind == "replay" && backend.replay_path.empty())
    throw ConfigError("replay backend needs a transcript path");
  return backend;
}

}  // namespace

RunConfig load_run_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  ordered_json doc = ordered_json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object: " + path);

  RunConfig config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "mode" && value.is_string()) {
      const std::string mode = value.get<std::string>();
      if (mode == "hybrid")
        config.pipeline.mode = PipelineMode::Hybrid;
      else if (mode == "llm_only")
        config.pipeline.mode = PipelineMode::LlmOnly;
      else if (mode == "nlu_only")
        config.pipeline.mode = PipelineMode::NluOnly;
      else
        throw ConfigError("unknown mode \"" + mode + "\"");
    } else if (key == "grammar" && value.is_string()) {
      config.grammar_path = value.get<std::string>();
    } else if (key == "schema" && value.is_string()) {
      config.schema_path = value.get<std::string>();
    } else if (key == "max_attempts" && value.is_number_integer()) {
      config.pipeline.max_attempts = value.get<int>();
    } else if (key == "filter_enabled" && value.is_boolean()) {
      config.pipeline.filter_enabled = value.get<bool>();
    } else if (key == "decoding" && value.is_object()) {
      config.pipeline.decoding = decoding_from(value);
    } else if (key == "backend" && value.is_object()) {
      config.backend = backend_from(value);
    } else {
      throw ConfigError("bad config setting \"" + key + "\"");
    }
  }
  if (config.pipeline.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  return config;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == "stub") return std::make_unique<StubBackend>();
  if (config.kind == "replay")
    return std::make_unique<ReplayBackend>(ReplayBackend::from_file(config.replay_path));
  if (config.kind == "http") return std::make_unique<HttpBackend>(config.http);
  throw ConfigError("unknown backend kind \"" + config.kind + "\"");
}

}  // namespace framecmd
