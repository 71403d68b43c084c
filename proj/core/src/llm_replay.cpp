#include <fstream>
#include <sstream>

#include "framecmd/llm.hpp"
#include "json.hpp"

namespace framecmd {

ReplayBackend ReplayBackend::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open replay transcript: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_array())
    throw ConfigError("replay transcript must be a JSON array of strings: " + path);
  std::vector<std::string> responses;
  for (const auto& entry : doc) {
    if (!entry.is_string())
      throw ConfigError("replay transcript holds a non-string entry: " + path);
    responses.push_back(entry.get<std::string>());
  }
  return ReplayBackend(std::move(responses));
}

std::string ReplayBackend::complete(const ChatPrompt& prompt, const DecodingParams&) {
  prompts_.push_back(prompt);
  if (next_ >= responses_.size())
    throw TranscriptExhausted("replay transcript exhausted after " +
                              std::to_string(responses_.size()) + " responses");
  return responses_[next_++];
}

}  // namespace framecmd
