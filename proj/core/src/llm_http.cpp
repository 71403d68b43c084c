#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "framecmd/llm.hpp"
#include "httplib.h"
#include "json.hpp"

namespace framecmd {
namespace {

std::string excerpt_of(const std::string& text) {
  constexpr std::size_t kMax = 120;
  std::string out;
  for (char c : text) {
    out.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
    if (out.size() == kMax) {
      out += "...";
      break;
    }
  }
  return out;
}

TransportError::Kind classify(httplib::Error error) {
  switch (error) {
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
    case httplib::Error::Write:
      return TransportError::Kind::Timeout;
    default:
      return TransportError::Kind::Connection;
  }
}

std::string request_body(const std::string& model, const ChatPrompt& prompt,
                         const DecodingParams& params) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array();
  body["messages"].push_back({{"role", "system"}, {"content", prompt.system}});
  body["messages"].push_back({{"role", "user"}, {"content", prompt.user}});
  body["max_tokens"] = params.max_new_tokens;
  body["temperature"] = params.temperature;
  body["top_p"] = params.top_p;
  body["repetition_penalty"] = params.repetition_penalty;
  return body.dump();
}

std::string content_of(const std::string& body) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (!doc.is_discarded() && doc.contains("choices") && doc["choices"].is_array() &&
      !doc["choices"].empty()) {
    const auto& first = doc["choices"][0];
    if (first.contains("message") && first["message"].contains("content") &&
        first["message"]["content"].is_string())
      return first["message"]["content"].get<std::string>();
  }
  throw TransportError("chat response has no choices[0].message.content: " + excerpt_of(body),
                       TransportError::Kind::BadResponse);
}

}  // namespace

struct HttpBackend::Impl {
  HttpBackendConfig config;
  std::counting_semaphore<> gate;

  explicit Impl(HttpBackendConfig c) : config(std::move(c)), gate(config.max_in_flight) {}
};

HttpBackend::HttpBackend(HttpBackendConfig config) {
  if (config.base_url.rfind("https://", 0) == 0)
    throw ConfigError("https endpoints are not supported; use a plain http URL");
  if (config.base_url.rfind("http://", 0) != 0)
    throw ConfigError("backend URL must start with http://");
  if (config.timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
  if (config.max_request_attempts < 1) throw ConfigError("max_request_attempts must be >= 1");
  if (config.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (config.path.empty() || config.path.front() != '/')
    throw ConfigError("backend path must start with '/'");
  impl_ = std::make_unique<Impl>(std::move(config));
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const ChatPrompt& prompt, const DecodingParams& params) {
  const HttpBackendConfig& config = impl_->config;
  impl_->gate.acquire();
  struct Release {
    std::counting_semaphore<>& gate;
    ~Release() { gate.release(); }
  } release{impl_->gate};

  httplib::Headers headers;
  if (!config.auth_env.empty()) {
    const char* token = std::getenv(config.auth_env.c_str());
    if (token && *token) headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const std::string body = request_body(config.model, prompt, params);
  const auto timeout = std::chrono::milliseconds(config.timeout_ms);

  std::string last_failure = "no request attempted";
  TransportError::Kind last_kind = TransportError::Kind::Connection;
  for (int attempt = 1; attempt <= config.max_request_attempts; ++attempt) {
    if (attempt > 1) {
      auto backoff = std::chrono::milliseconds(config.backoff_initial_ms) * (1 << (attempt - 2));
      std::this_thread::sleep_for(backoff);
    }
    // one client per call: httplib clients are not safe for concurrent reuse
    httplib::Client client(config.base_url);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Result result = client.Post(config.path, headers, body, "application/json");
    if (!result) {
      last_kind = classify(result.error());
      last_failure = "transport failure: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 200 && result->status < 300) return content_of(result->body);
    std::string message =
        "HTTP " + std::to_string(result->status) + ": " + excerpt_of(result->body);
    if (result->status >= 500) {
      last_kind = TransportError::Kind::HttpStatus;
      last_failure = std::move(message);
      continue;
    }
    throw TransportError(message, TransportError::Kind::HttpStatus);
  }
  throw TransportError(last_failure + " (after " + std::to_string(config.max_request_attempts) +
                           " attempts)",
                       last_kind);
}

}  // namespace framecmd
