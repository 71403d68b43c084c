#include "framecmd/llm.hpp"

#include <sstream>

namespace framecmd {
namespace {

bool blank(const std::string& text) {
  for (char c : text)
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
  return true;
}

std::string inventory_block(const FrameSchema& schema) {
  std::ostringstream os;
  for (const auto& [frame, roles] : schema.element_rules) {
    os << "- " << frame << ": ";
    if (roles.empty()) {
      os << "(no elements)";
    } else {
      for (std::size_t i = 0; i < roles.size(); ++i) {
        if (i) os << ", ";
        os << roles[i];
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string system_text(const FrameSchema& schema) {
  std::ostringstream os;
  os << "You are a helpful robotics assistant. Convert the user's instruction into a sequence "
        "of robot action frames. Respond with exactly one JSON object of the form "
        "{\"frames\":[{\"frame\":\"<name>\",\"elements\":{\"<Role>\":\"<value>\"}}]} "
        "and no prose.\n"
        "Valid action frames and their allowed elements:\n"
     << inventory_block(schema)
     << "When the instruction fits no valid frame, respond with {\"frames\":[]}.";
  return os.str();
}

std::string rstrip(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' '))
    text.pop_back();
  return text;
}

}  // namespace

ChatPrompt build_initial_prompt(const std::string& sentence, const FrameSchema& schema) {
  if (blank(sentence)) throw Error("empty sentence");
  return {system_text(schema), sentence};
}

ChatPrompt build_feedback_prompt(const std::string& sentence, const std::string& previous_response,
                                 const std::string& rendered_report, const FrameSchema& schema) {
  if (blank(sentence)) throw Error("empty argument: sentence");
  if (blank(previous_response)) throw Error("empty argument: previous_response");
  if (blank(rendered_report)) throw Error("empty argument: rendered_report");
  std::ostringstream os;
  os << "Original instruction:\n"
     << sentence << "\n\n"
     << "Previous response:\n"
     << rstrip(previous_response) << "\n\n"
     << "Validation errors:\n"
     << rstrip(rendered_report) << "\n\n"
     << "Valid action frames:\n"
     << inventory_block(schema) << "\n"
     << "Produce a corrected single JSON object; keep all valid parts of the previous response, "
        "and respond with no prose.";
  return {system_text(schema), os.str()};
}

}  // namespace framecmd
