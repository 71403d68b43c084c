#include "framecmd/validate.hpp"

#include <set>
#include <sstream>

namespace framecmd {
namespace {

constexpr const char* kEmptyCommandWarning = "empty command";

ValidationError unknown_frame(std::size_t index, const std::string& name) {
  ValidationError e;
  e.frame_index = index;
  e.kind = ErrorKind::UnknownFrame;
  e.subject = name;
  e.frame_name = name;
  e.message = "unknown frame \"" + name + "\"";
  return e;
}

ValidationError unknown_element(std::size_t index, const std::string& frame,
                                const std::string& role) {
  ValidationError e;
  e.frame_index = index;
  e.kind = ErrorKind::UnknownElement;
  e.subject = role;
  e.frame_name = frame;
  e.message = "unknown element \"" + role + "\" in frame \"" + frame + "\"";
  return e;
}

ValidationError empty_value(std::size_t index, const std::string& frame, const std::string& role) {
  ValidationError e;
  e.frame_index = index;
  e.kind = ErrorKind::EmptyValue;
  e.subject = role;
  e.frame_name = frame;
  e.message = "empty value for element \"" + role + "\" in frame \"" + frame + "\"";
  return e;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out;
}

std::string frame_list(const FrameSchema& schema) {
  std::vector<std::string> names;
  for (const auto& [frame, roles] : schema.element_rules) names.push_back(frame);
  return join(names);
}

}  // namespace

LightResult validate_light(const FrameSet& frames, const FrameSchema& schema) {
  LightResult result;
  result.report.stage = ValidationStage::Light;
  for (std::size_t idx = 0; idx < frames.frames.size(); ++idx) {
    const FrameInstance& frame = frames.frames[idx];
    if (!schema.has_frame(frame.name)) {
      result.report.errors.push_back(unknown_frame(idx, frame.name));
      continue;
    }
    FrameInstance kept;
    kept.name = frame.name;
    for (const auto& [role, value] : frame.elements) {
      if (!schema.role_allowed(frame.name, role)) {
        result.report.errors.push_back(unknown_element(idx, frame.name, role));
      } else if (value.empty()) {
        result.report.errors.push_back(empty_value(idx, frame.name, role));
      } else {
        kept.elements.emplace_back(role, value);
      }
    }
    result.frames.frames.push_back(std::move(kept));
  }
  if (result.report.errors.empty())
    result.report.status = ValidationStatus::Valid;
  else if (!result.frames.empty())
    result.report.status = ValidationStatus::Salvaged;
  else
    result.report.status = ValidationStatus::Invalid;
  if (result.frames.empty()) result.report.warnings.push_back(kEmptyCommandWarning);
  return result;
}

ValidationReport validate_strict(const FrameSet& frames, const FrameSchema& schema) {
  ValidationReport report;
  report.stage = ValidationStage::Strict;
  for (std::size_t idx = 0; idx < frames.frames.size(); ++idx) {
    const FrameInstance& frame = frames.frames[idx];
    if (!schema.has_frame(frame.name)) {
      // element checks need an allowed-role set, so an unknown frame
      // contributes exactly one error
      report.errors.push_back(unknown_frame(idx, frame.name));
      continue;
    }
    for (const auto& [role, value] : frame.elements) {
      if (!schema.role_allowed(frame.name, role))
        report.errors.push_back(unknown_element(idx, frame.name, role));
      else if (value.empty())
        report.errors.push_back(empty_value(idx, frame.name, role));
    }
  }
  report.status = report.errors.empty() ? ValidationStatus::Valid : ValidationStatus::Invalid;
  if (frames.empty()) report.warnings.push_back(kEmptyCommandWarning);
  return report;
}

std::string render_error_report(const ValidationReport& report, const FrameSchema& schema) {
  std::ostringstream os;
  bool structure_trouble = false;
  for (const ValidationError& error : report.errors) {
    switch (error.kind) {
      case ErrorKind::UnknownFrame:
        os << "- unknown frame \"" << error.subject << "\"; valid frames are: "
           << frame_list(schema) << "\n";
        break;
      case ErrorKind::UnknownElement:
        os << "- unknown element \"" << error.subject << "\" in frame \"" << error.frame_name
           << "\"\n";
        break;
      case ErrorKind::EmptyValue:
        os << "- empty value for element \"" << error.subject << "\" in frame \""
           << error.frame_name << "\"\n";
        break;
      case ErrorKind::MalformedStructure:
        os << "- malformed structure: " << error.subject << "\n";
        structure_trouble = true;
        break;
      case ErrorKind::ExtractionFailure:
        os << "- no JSON object found in the response: " << error.subject << "\n";
        structure_trouble = true;
        break;
    }
  }
  for (const std::string& warning : report.warnings) os << "- warning: " << warning << "\n";
  if (structure_trouble)
    os << "To fix this, reply with a single JSON object and no prose.\n";

  os << "Valid action frames: " << frame_list(schema) << "\n";

  std::set<std::string> listed;
  for (const ValidationError& error : report.errors) {
    if (error.frame_name.empty() || listed.count(error.frame_name)) continue;
    const std::vector<std::string>* roles = schema.roles_of(error.frame_name);
    if (!roles) continue;
    listed.insert(error.frame_name);
    os << "Allowed elements for \"" << error.frame_name << "\": " << join(*roles) << "\n";
  }
  return os.str();
}

ValidationReport deserialize_failure_report(const DeserializeError& error) {
  ValidationReport report;
  report.stage = ValidationStage::Light;
  report.status = ValidationStatus::Invalid;
  ValidationError e;
  e.kind = error.kind() == DeserializeError::Kind::ExtractionFailure
               ? ErrorKind::ExtractionFailure
               : ErrorKind::MalformedStructure;
  e.subject = error.excerpt();
  e.message = error.what();
  report.errors.push_back(std::move(e));
  return report;
}

}  // namespace framecmd
