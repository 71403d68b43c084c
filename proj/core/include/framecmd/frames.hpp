#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "framecmd/errors.hpp"

namespace framecmd {

/// One action frame: a frame name plus ordered role/value pairs.
/// Element order is meaningful for serialization, not for comparison.
struct FrameInstance {
  std::string name;
  std::vector<std::pair<std::string, std::string>> elements;

  std::optional<std::string> value_of(std::string_view role) const {
    for (const auto& [r, v] : elements)
      if (r == role) return v;
    return std::nullopt;
  }
  bool operator==(const FrameInstance&) const = default;
};

/// Ordered sequence of frames, the pipeline's command representation.
struct FrameSet {
  std::vector<FrameInstance> frames;

  bool empty() const { return frames.empty(); }
  bool operator==(const FrameSet&) const = default;
};

/// Frame inventory: which frames exist, which roles each allows (in file
/// order, used verbatim in reports), plus rewrite tables applied during
/// canonicalization. Immutable after load_schema().
struct FrameSchema {
  std::vector<std::pair<std::string, std::vector<std::string>>> element_rules;
  std::map<std::string, std::string> key_remap;
  std::map<std::string, std::string> frame_synonyms;
  bool filter_enabled = true;

  bool has_frame(std::string_view name) const {
    for (const auto& [frame, roles] : element_rules)
      if (frame == name) return true;
    return false;
  }
  const std::vector<std::string>* roles_of(std::string_view name) const {
    for (const auto& [frame, roles] : element_rules)
      if (frame == name) return &roles;
    return nullptr;
  }
  bool role_allowed(std::string_view frame, std::string_view role) const {
    const auto* roles = roles_of(frame);
    if (!roles) return false;
    for (const auto& r : *roles)
      if (r == role) return true;
    return false;
  }
};

/// Schema-file problem (bad shape, remap/synonym chains, unknown targets).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Response text that yielded no usable frame set. ExtractionFailure means no
/// candidate JSON object was found at all; SchemaShape means JSON was found
/// but nothing in it had the expected {"frames":[...]} shape.
class DeserializeError : public Error {
 public:
  enum class Kind { ExtractionFailure, SchemaShape };

  DeserializeError(const std::string& message, Kind kind, std::string excerpt)
      : Error(message), kind_(kind), excerpt_(std::move(excerpt)) {}

  Kind kind() const { return kind_; }
  const std::string& excerpt() const { return excerpt_; }

 private:
  Kind kind_;
  std::string excerpt_;
};

/// Parses and checks a schema JSON document. Throws SchemaError.
FrameSchema load_schema(std::string_view text);

/// Compact single-line JSON, {"frames":[{"frame":...,"elements":{...}}]}.
/// Element order is preserved; equal frame sets serialize identically.
std::string serialize(const FrameSet& frames);

/// Recovers a frame set from free-form model output: scans for embedded JSON
/// objects, accepts the first one carrying a "frames" key at any nesting
/// depth, and reads frames tolerantly (non-string values stringified,
/// duplicate roles first-wins). Non-fatal oddities append to warnings.
/// Throws DeserializeError when nothing usable is present.
FrameSet deserialize(std::string_view text, std::vector<std::string>& warnings);

/// Order-insensitive comparison view: "frame=<name>" for each frame plus
/// "<Role>=<value>" for each element, pooled across the whole set.
std::vector<std::string> kv_pairs(const FrameSet& frames);

}  // namespace framecmd
