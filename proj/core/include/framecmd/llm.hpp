#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "framecmd/frames.hpp"

namespace framecmd {

struct ChatPrompt {
  std::string system;
  std::string user;

  bool operator==(const ChatPrompt&) const = default;
};

struct DecodingParams {
  int max_new_tokens = 256;
  double temperature = 0.2;
  double top_p = 0.9;
  double repetition_penalty = 1.1;
};

/// One chat completion provider. complete() returns the raw assistant text;
/// transport problems surface as TransportError, never as empty strings.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const ChatPrompt& prompt, const DecodingParams& params) = 0;
  /// True when complete() may be called from several threads at once.
  virtual bool supports_concurrent_calls() const { return false; }
};

/// System text plus the instruction; the system text carries the output
/// contract and the schema's frame/role inventory and is byte-identical
/// across the initial and every feedback prompt of a run.
ChatPrompt build_initial_prompt(const std::string& sentence, const FrameSchema& schema);

/// Correction prompt: same system text, user text with labeled sections for
/// the original instruction, the previous response, and the rendered report.
ChatPrompt build_feedback_prompt(const std::string& sentence, const std::string& previous_response,
                                 const std::string& rendered_report, const FrameSchema& schema);

/// One keyword rule of the stub model: a verb lexicon selecting a frame, the
/// role for the direct object, and preposition-introduced roles.
struct StubRule {
  std::string frame;
  std::set<std::string> verbs;
  std::string object_role;                                           // "" = no object capture
  std::vector<std::pair<std::set<std::string>, std::string>> preps;  // preposition words -> role
  bool needs_preposition = false;  // rule fires only when a bound preposition follows the verb
  std::string state_role;          // role fed by an on/off particle, "" = none
  std::set<std::string> skip_words;  // particles dropped from captured values
};

/// Deterministic rule-based stand-in for a language model. Splits the
/// instruction into clauses on "and"/"then", applies the first matching verb
/// rule per clause, and emits the serialized frame JSON. On a feedback
/// prompt it repairs its previous response by dropping exactly what the
/// report flagged. Pure function of the prompt: thread-safe.
class StubBackend : public Backend {
 public:
  StubBackend() : StubBackend(default_rules()) {}
  explicit StubBackend(std::vector<StubRule> rules) : rules_(std::move(rules)) {}

  std::string complete(const ChatPrompt& prompt, const DecodingParams& params) override;
  bool supports_concurrent_calls() const override { return true; }

  static std::vector<StubRule> default_rules();

 private:
  std::vector<StubRule> rules_;
};

/// Replay-past-the-end of a canned transcript.
class TranscriptExhausted : public Error {
 public:
  using Error::Error;
};

/// Plays back a fixed response list in order, recording every prompt it was
/// asked. Single-threaded by design.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::vector<std::string> responses) : responses_(std::move(responses)) {}

  /// Loads a JSON array of response strings.
  static ReplayBackend from_file(const std::string& path);

  std::string complete(const ChatPrompt& prompt, const DecodingParams& params) override;

  const std::vector<ChatPrompt>& recorded_prompts() const { return prompts_; }
  std::size_t responses_consumed() const { return next_; }

 private:
  std::vector<std::string> responses_;
  std::vector<ChatPrompt> prompts_;
  std::size_t next_ = 0;
};

/// Failure talking to an HTTP backend after all retries.
class TransportError : public Error {
 public:
  enum class Kind { Connection, Timeout, HttpStatus, BadResponse };

  TransportError(const std::string& message, Kind kind) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. "http://localhost:8000"; https is not supported
  std::string path = "/v1/chat/completions";
  std::string model;
  int timeout_ms = 30000;
  int max_request_attempts = 3;  // total tries per completion, not extra retries
  int backoff_initial_ms = 200;
  std::string auth_env = "FRAMECMD_API_TOKEN";  // bearer token env var, "" = no auth
  int max_in_flight = 4;
};

/// OpenAI-style chat-completions client over plain HTTP. Retries connection
/// errors, timeouts, and 5xx responses with exponential backoff inside the
/// attempt budget; 4xx responses fail immediately. Concurrent calls are
/// capped at max_in_flight.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  std::string complete(const ChatPrompt& prompt, const DecodingParams& params) override;
  bool supports_concurrent_calls() const override { return true; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace framecmd
