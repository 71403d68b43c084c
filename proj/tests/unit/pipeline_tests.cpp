#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "framecmd/pipeline.hpp"

using namespace framecmd;
using testsupport::frame;
using testsupport::small_schema;

namespace {

PipelineConfig config_for(PipelineMode mode, int max_attempts = 3) {
  PipelineConfig config;
  config.mode = mode;
  config.max_attempts = max_attempts;
  return config;
}

std::string one_frame_response(const char* name,
                               std::vector<std::pair<std::string, std::string>> elements) {
  FrameSet set;
  set.frames.push_back(frame(name, std::move(elements)));
  return serialize(set);
}

struct ThrowingBackend : Backend {
  std::string complete(const ChatPrompt&, const DecodingParams&) override {
    throw TransportError("model host went away", TransportError::Kind::Connection);
  }
};

/// Config file scratch space; removed on scope exit.
struct TempFile {
  std::string path;

  explicit TempFile(const std::string& content) {
    static int counter = 0;
    path = "pipeline_test_tmp_" + std::to_string(counter++) + ".json";
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("the correction loop accepts a repaired second attempt") {
  FrameSchema schema = small_schema();
  ReplayBackend backend({one_frame_response("Grab", {{"Theme", "the box"}}),
                         one_frame_response("Taking", {{"Theme", "the box"}})});

  PipelineResult result =
      run_hybrid("grab the box", backend, schema, config_for(PipelineMode::Hybrid));

  CHECK(result.outcome == RunOutcome::ValidCommand);
  CHECK(result.attempts_used == 2);
  FrameSet expected;
  expected.frames.push_back(frame("Taking", {{"Theme", "the box"}}));
  CHECK(result.frames == expected);

  REQUIRE(result.transcript.size() == 2);
  const Attempt& first = result.transcript[0];
  REQUIRE(first.prompt.has_value());
  CHECK(*first.prompt == build_initial_prompt("grab the box", schema));
  CHECK(first.report.status == ValidationStatus::Invalid);
  CHECK(first.report.stage == ValidationStage::Light);
  REQUIRE(!first.report.errors.empty());
  CHECK(first.report.errors[0].kind == ErrorKind::UnknownFrame);
  CHECK(first.report.errors[0].subject == "Grab");

  const Attempt& second = result.transcript[1];
  REQUIRE(second.prompt.has_value());
  CHECK(second.prompt->system == first.prompt->system);
  CHECK(second.prompt->user.find("Original instruction:\ngrab the box") != std::string::npos);
  CHECK(second.prompt->user.find("- unknown frame \"Grab\"") != std::string::npos);
  CHECK(second.prompt->user.find("Valid action frames:") != std::string::npos);
  CHECK(second.report.status == ValidationStatus::Valid);
  CHECK(backend.recorded_prompts().size() == 2);
}

TEST_CASE("a compliant first answer needs one attempt") {
  FrameSchema schema = small_schema();
  StubBackend backend;

  PipelineResult result =
      run_hybrid("take the laptop", backend, schema, config_for(PipelineMode::Hybrid));

  CHECK(result.outcome == RunOutcome::ValidCommand);
  CHECK(result.attempts_used == 1);
  FrameSet expected;
  expected.frames.push_back(frame("Taking", {{"Theme", "the laptop"}}));
  CHECK(result.frames == expected);
  REQUIRE(result.transcript.size() == 1);
  CHECK(result.transcript[0].report.ok());
}

TEST_CASE("prose answers exhaust the budget into the empty fallback") {
  FrameSchema schema = small_schema();
  ReplayBackend backend({"Sure! I'd be happy to help with that.",
                         "Here is what I would do: pick up the box."});

  PipelineResult result =
      run_hybrid("grab the box", backend, schema, config_for(PipelineMode::Hybrid, 2));

  CHECK(result.outcome == RunOutcome::EmptyFallback);
  CHECK(result.attempts_used == 2);
  CHECK(result.frames.empty());
  REQUIRE(result.transcript.size() == 2);
  for (const Attempt& attempt : result.transcript) {
    CHECK(attempt.report.status == ValidationStatus::Invalid);
    REQUIRE(!attempt.report.errors.empty());
    CHECK(attempt.report.errors[0].kind == ErrorKind::ExtractionFailure);
  }
  const std::string& feedback = backend.recorded_prompts()[1].user;
  CHECK(feedback.find("no JSON object found in the response") != std::string::npos);
  CHECK(feedback.find("reply with a single JSON object and no prose") != std::string::npos);
  CHECK(feedback.find("Previous response:\nSure! I'd be happy to help") != std::string::npos);
}

TEST_CASE("salvageable extras do not cost an extra attempt") {
  FrameSchema schema = small_schema();
  const std::string response =
      one_frame_response("Taking", {{"Theme", "the box"}, {"Color", "red"}});
  FrameSet expected;
  expected.frames.push_back(frame("Taking", {{"Theme", "the box"}}));

  SUBCASE("the element filter removes them before validation") {
    ReplayBackend backend({response});
    PipelineResult result =
        run_hybrid("grab the box", backend, schema, config_for(PipelineMode::Hybrid));
    CHECK(result.outcome == RunOutcome::ValidCommand);
    CHECK(result.attempts_used == 1);
    CHECK(result.frames == expected);
    CHECK(result.transcript[0].report.status == ValidationStatus::Valid);
    REQUIRE(!result.transcript[0].report.warnings.empty());
    CHECK(result.transcript[0].report.warnings[0].find("Color") != std::string::npos);
  }

  SUBCASE("with the filter off the light pass salvages them") {
    ReplayBackend backend({response});
    PipelineConfig config = config_for(PipelineMode::Hybrid);
    config.filter_enabled = false;
    PipelineResult result = run_hybrid("grab the box", backend, schema, config);
    CHECK(result.outcome == RunOutcome::ValidCommand);
    CHECK(result.attempts_used == 1);
    CHECK(result.frames == expected);
    CHECK(result.transcript[0].report.status == ValidationStatus::Salvaged);
    REQUIRE(!result.transcript[0].report.errors.empty());
    CHECK(result.transcript[0].report.errors[0].kind == ErrorKind::UnknownElement);
    CHECK(result.transcript[0].report.errors[0].subject == "Color");
  }
}

TEST_CASE("a blank sentence never reaches the model") {
  FrameSchema schema = small_schema();
  ReplayBackend backend({one_frame_response("Taking", {{"Theme", "x"}})});
  for (const char* sentence : {"", "   ", " \t\r\n"}) {
    PipelineResult result =
        run_hybrid(sentence, backend, schema, config_for(PipelineMode::Hybrid));
    CHECK(result.outcome == RunOutcome::EmptyFallback);
    CHECK(result.attempts_used == 0);
    CHECK(result.transcript.empty());
  }
  CHECK(backend.responses_consumed() == 0);
}

TEST_CASE("frame and role aliases are rewritten inside the loop") {
  FrameSchema schema = small_schema();
  ReplayBackend backend({one_frame_response("Going", {{"Destination", "the kitchen"}})});

  PipelineResult result =
      run_hybrid("go to the kitchen", backend, schema, config_for(PipelineMode::Hybrid));

  CHECK(result.outcome == RunOutcome::ValidCommand);
  CHECK(result.attempts_used == 1);
  FrameSet expected;
  expected.frames.push_back(frame("Motion", {{"Goal", "the kitchen"}}));
  CHECK(result.frames == expected);
}

TEST_CASE("transport failures propagate to the caller") {
  FrameSchema schema = small_schema();
  ThrowingBackend backend;
  CHECK_THROWS_AS(run_hybrid("grab the box", backend, schema, config_for(PipelineMode::Hybrid)),
                  TransportError);
}

TEST_CASE("the model-only mode reports problems but does not gate on them") {
  FrameSchema schema = small_schema();
  ReplayBackend backend({one_frame_response("Going", {{"Destination", "the kitchen"}})});

  PipelineResult result =
      run_llm_only("go to the kitchen", backend, schema, config_for(PipelineMode::LlmOnly));

  CHECK(result.outcome == RunOutcome::ValidCommand);
  CHECK(result.attempts_used == 1);
  FrameSet verbatim;
  verbatim.frames.push_back(frame("Going", {{"Destination", "the kitchen"}}));
  CHECK(result.frames == verbatim);
  REQUIRE(result.transcript.size() == 1);
  CHECK(result.transcript[0].report.status == ValidationStatus::Invalid);
  CHECK(result.transcript[0].report.stage == ValidationStage::Strict);
}

TEST_CASE("the model-only mode falls back when nothing can be extracted") {
  FrameSchema schema = small_schema();

  SUBCASE("prose response") {
    ReplayBackend backend({"I cannot help with that."});
    PipelineResult result =
        run_llm_only("grab the box", backend, schema, config_for(PipelineMode::LlmOnly));
    CHECK(result.outcome == RunOutcome::EmptyFallback);
    CHECK(result.attempts_used == 1);
    REQUIRE(!result.transcript[0].report.errors.empty());
    CHECK(result.transcript[0].report.errors[0].kind == ErrorKind::ExtractionFailure);
  }

  SUBCASE("empty frame list") {
    ReplayBackend backend({R"({"frames": []})"});
    PipelineResult result =
        run_llm_only("do nothing", backend, schema, config_for(PipelineMode::LlmOnly));
    CHECK(result.outcome == RunOutcome::EmptyFallback);
    CHECK(result.attempts_used == 1);
    CHECK(result.frames.empty());
    CHECK(result.transcript[0].report.ok());
  }
}

TEST_CASE("the grammar-only mode parses straight to frames") {
  FrameSchema schema = small_schema();
  Grammar grammar = load_grammar(testsupport::kTwoCommandGrammarText);

  PipelineResult result =
      run_nlu_only("take the laptop", grammar, schema, config_for(PipelineMode::NluOnly));

  CHECK(result.outcome == RunOutcome::ValidCommand);
  CHECK(result.attempts_used == 1);
  FrameSet expected;
  expected.frames.push_back(frame("Taking", {{"Theme", "the laptop"}}));
  CHECK(result.frames == expected);
  REQUIRE(result.transcript.size() == 1);
  CHECK(!result.transcript[0].prompt.has_value());
  CHECK(result.transcript[0].raw_response == serialize(expected));
  CHECK(result.transcript[0].report.stage == ValidationStage::Strict);
  CHECK(result.transcript[0].report.ok());
}

TEST_CASE("the grammar-only mode keeps conjoined commands in order") {
  FrameSchema schema = small_schema();
  Grammar grammar = load_grammar(testsupport::kTwoCommandGrammarText);

  PipelineResult result = run_nlu_only("take the laptop and bring the book to the couch", grammar,
                                       schema, config_for(PipelineMode::NluOnly));

  CHECK(result.outcome == RunOutcome::ValidCommand);
  FrameSet expected;
  expected.frames.push_back(frame("Taking", {{"Theme", "the laptop"}}));
  expected.frames.push_back(frame("Bringing", {{"Theme", "the book"}, {"Goal", "the couch"}}));
  CHECK(result.frames == expected);
}

TEST_CASE("the grammar-only mode reports parse failures") {
  FrameSchema schema = small_schema();
  Grammar grammar = load_grammar(testsupport::kTwoCommandGrammarText);

  SUBCASE("word order the grammar rejects") {
    PipelineResult result =
        run_nlu_only("laptop the take", grammar, schema, config_for(PipelineMode::NluOnly));
    CHECK(result.outcome == RunOutcome::EmptyFallback);
    CHECK(result.attempts_used == 1);
    CHECK(result.frames.empty());
    REQUIRE(result.transcript.size() == 1);
    CHECK(result.transcript[0].raw_response.empty());
    REQUIRE(!result.transcript[0].report.errors.empty());
    CHECK(result.transcript[0].report.errors[0].kind == ErrorKind::MalformedStructure);
    CHECK(result.transcript[0].report.errors[0].message.find("no parse at token") !=
          std::string::npos);
  }

  SUBCASE("empty sentence") {
    PipelineResult result = run_nlu_only("", grammar, schema, config_for(PipelineMode::NluOnly));
    CHECK(result.outcome == RunOutcome::EmptyFallback);
    CHECK(result.attempts_used == 1);
    REQUIRE(!result.transcript[0].report.errors.empty());
    CHECK(result.transcript[0].report.errors[0].message.find("no parse at end of input") !=
          std::string::npos);
  }
}

TEST_CASE("each entry point insists on its own mode") {
  FrameSchema schema = small_schema();
  Grammar grammar = load_grammar(testsupport::kTwoCommandGrammarText);
  StubBackend backend;

  CHECK_THROWS_WITH_AS(
      run_hybrid("x", backend, schema, config_for(PipelineMode::LlmOnly)),
      "config mode is not hybrid", ConfigError);
  CHECK_THROWS_WITH_AS(
      run_llm_only("x", backend, schema, config_for(PipelineMode::Hybrid)),
      "config mode is not llm_only", ConfigError);
  CHECK_THROWS_WITH_AS(
      run_nlu_only("x", grammar, schema, config_for(PipelineMode::Hybrid)),
      "config mode is not nlu_only", ConfigError);
  CHECK_THROWS_WITH_AS(
      run_hybrid("x", backend, schema, config_for(PipelineMode::Hybrid, 0)),
      "max_attempts must be >= 1", ConfigError);
}

TEST_CASE("a full run config file round-trips every setting") {
  TempFile file(R"json({
    "mode": "llm_only",
    "grammar": "g.gram",
    "schema": "s.json",
    "max_attempts": 5,
    "filter_enabled": false,
    "decoding": {
      "max_new_tokens": 64,
      "temperature": 0.7,
      "top_p": 0.8,
      "repetition_penalty": 1.3
    },
    "backend": {
      "kind": "http",
      "base_url": "http://localhost:8000",
      "endpoint_path": "/v2/chat",
      "model": "local-chat",
      "timeout_ms": 1500,
      "max_request_attempts": 4,
      "backoff_initial_ms": 50,
      "auth_env": "MY_TOKEN",
      "max_in_flight": 2
    }
  })json");

  RunConfig config = load_run_config_file(file.path);
  CHECK(config.pipeline.mode == PipelineMode::LlmOnly);
  CHECK(config.grammar_path == "g.gram");
  CHECK(config.schema_path == "s.json");
  CHECK(config.pipeline.max_attempts == 5);
  REQUIRE(config.pipeline.filter_enabled.has_value());
  CHECK(*config.pipeline.filter_enabled == false);
  CHECK(config.pipeline.decoding.max_new_tokens == 64);
  CHECK(config.pipeline.decoding.temperature == doctest::Approx(0.7));
  CHECK(config.pipeline.decoding.top_p == doctest::Approx(0.8));
  CHECK(config.pipeline.decoding.repetition_penalty == doctest::Approx(1.3));
  CHECK(config.backend.kind == "http");
  CHECK(config.backend.http.base_url == "http://localhost:8000");
  CHECK(config.backend.http.path == "/v2/chat");
  CHECK(config.backend.http.model == "local-chat");
  CHECK(config.backend.http.timeout_ms == 1500);
  CHECK(config.backend.http.max_request_attempts == 4);
  CHECK(config.backend.http.backoff_initial_ms == 50);
  CHECK(config.backend.http.auth_env == "MY_TOKEN");
  CHECK(config.backend.http.max_in_flight == 2);
}

TEST_CASE("an empty run config keeps the defaults") {
  TempFile file("{}");
  RunConfig config = load_run_config_file(file.path);
  CHECK(config.pipeline.mode == PipelineMode::Hybrid);
  CHECK(config.pipeline.max_attempts == 3);
  CHECK(!config.pipeline.filter_enabled.has_value());
  CHECK(config.backend.kind == "stub");
  CHECK(config.pipeline.decoding.max_new_tokens == 256);
}

TEST_CASE("run config problems are reported by name") {
  auto load = [](const std::string& text) {
    TempFile file(text);
    return load_run_config_file(file.path);
  };

  CHECK_THROWS_WITH_AS(load(R"({"speed": 9})"), "bad config setting \"speed\"", ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"decoding": {"beam_width": 4}})"),
                       "bad decoding setting \"beam_width\"", ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"backend": {"url": "x"}})"), "bad backend setting \"url\"",
                       ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"mode": "mixed"})"), "unknown mode \"mixed\"", ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"backend": {"kind": "magic"}})"),
                       "unknown backend kind \"magic\"", ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"backend": {"kind": "replay"}})"),
                       "replay backend needs a transcript path", ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"max_attempts": 0})"), "max_attempts must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"decoding": {"max_new_tokens": 0}})"),
                       "max_new_tokens must be >= 1", ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"decoding": {"temperature": -0.5}})"),
                       "temperature must be >= 0", ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"decoding": {"top_p": 0}})"), "top_p must be in (0, 1]",
                       ConfigError);
  CHECK_THROWS_WITH_AS(load(R"({"decoding": {"repetition_penalty": 0.5}})"),
                       "repetition_penalty must be >= 1", ConfigError);
  CHECK_THROWS_AS(load("not json"), ConfigError);
  CHECK_THROWS_AS(load("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(load_run_config_file("no_such_config_file.json"), ConfigError);
}

TEST_CASE("make_backend builds what the config names") {
  BackendConfig stub;
  CHECK(make_backend(stub)->supports_concurrent_calls());

  TempFile transcript(R"(["first", "second"])");
  BackendConfig replay;
  replay.kind = "replay";
  replay.replay_path = transcript.path;
  std::unique_ptr<Backend> played = make_backend(replay);
  CHECK(played->complete(ChatPrompt{"s", "u"}, DecodingParams{}) == "first");
  CHECK(!played->supports_concurrent_calls());

  BackendConfig http;
  http.kind = "http";
  http.http.base_url = "http://localhost:9999";
  http.http.model = "m";
  CHECK(make_backend(http)->supports_concurrent_calls());

  BackendConfig bad_url = http;
  bad_url.http.base_url = "https://localhost:9999";
  CHECK_THROWS_AS(make_backend(bad_url), ConfigError);

  BackendConfig unknown;
  unknown.kind = "oracle";
  CHECK_THROWS_WITH_AS(make_backend(unknown), "unknown backend kind \"oracle\"", ConfigError);
}
