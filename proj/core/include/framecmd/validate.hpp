#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "framecmd/frames.hpp"

namespace framecmd {

enum class ErrorKind {
  UnknownFrame,
  UnknownElement,
  EmptyValue,
  MalformedStructure,
  ExtractionFailure,
};

struct ValidationError {
  std::optional<std::size_t> frame_index;  // position in the validated set; absent for
                                           // structure-level errors
  ErrorKind kind = ErrorKind::MalformedStructure;
  std::string subject;     // frame name, role name, or response excerpt
  std::string frame_name;  // owning frame where one exists, "" for structure-level errors
  std::string message;     // human-readable single line
};

enum class ValidationStatus {
  Valid,
  Salvaged,  // light stage dropped something but a usable command remains
  Invalid,
};

enum class ValidationStage {
  Light,
  Strict,
};

struct ValidationReport {
  ValidationStatus status = ValidationStatus::Valid;
  ValidationStage stage = ValidationStage::Light;
  std::vector<ValidationError> errors;
  std::vector<std::string> warnings;

  bool ok() const { return status == ValidationStatus::Valid; }
};

struct LightResult {
  FrameSet frames;  // what survived
  ValidationReport report;
};

/// Salvage pass: removes unknown frames, unknown elements, and empty-valued
/// elements, recording each removal as an error. Valid when nothing was
/// dropped, Salvaged when drops left at least one frame standing, Invalid
/// when drops emptied the set. An empty result adds an "empty command"
/// warning; empty input is Valid.
LightResult validate_light(const FrameSet& frames, const FrameSchema& schema);

/// Read-only pass over an already-canonical set. Unknown frames report
/// UnknownFrame and suppress element checks inside them; known frames report
/// UnknownElement and EmptyValue per offending element. Empty input is Valid
/// with an "empty command" warning.
ValidationReport validate_strict(const FrameSet& frames, const FrameSchema& schema);

/// Feedback text for the correction loop: one "- ..." line per error and
/// warning, a reply-format reminder when extraction or structure failed, the
/// schema's frame inventory, and allowed elements for each implicated frame.
std::string render_error_report(const ValidationReport& report, const FrameSchema& schema);

/// Wraps a deserialize failure as a report renderable by render_error_report.
ValidationReport deserialize_failure_report(const DeserializeError& error);

}  // namespace framecmd
