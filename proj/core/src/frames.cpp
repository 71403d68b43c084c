#include "framecmd/frames.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

#include "json.hpp"

namespace framecmd {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string excerpt_of(std::string_view text) {
  constexpr std::size_t kMax = 120;
  std::string out;
  out.reserve(std::min(text.size(), kMax + 3));
  for (char c : text) {
    out.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
    if (out.size() == kMax) {
      out += "...";
      break;
    }
  }
  return out;
}

// JSON value tree that keeps object members in order, duplicates included.
// nlohmann's DOM silently merges duplicate keys; the light validation stage
// must instead see them and warn, hence this SAX-built mirror.
struct RawValue {
  enum class Type { Null, Boolean, Integer, Unsigned, Double, String, Array, Object };
  Type type = Type::Null;
  bool boolean = false;
  std::int64_t integer = 0;
  std::uint64_t unsigned_integer = 0;
  double real = 0.0;
  std::string string;
  std::vector<RawValue> items;
  std::vector<std::pair<std::string, RawValue>> members;

  const RawValue* find(std::string_view key) const {
    for (const auto& [k, v] : members)
      if (k == key) return &v;
    return nullptr;
  }
};

class RawBuilder : public nlohmann::json_sax<ordered_json> {
 public:
  RawValue root;

  bool null() override { return emit(RawValue{}); }
  bool boolean(bool v) override {
    RawValue raw;
    raw.type = RawValue::Type::Boolean;
    raw.boolean = v;
    return emit(std::move(raw));
  }
  bool number_integer(number_integer_t v) override {
    RawValue raw;
    raw.type = RawValue::Type::Integer;
    raw.integer = v;
    return emit(std::move(raw));
  }
  bool number_unsigned(number_unsigned_t v) override {
    RawValue raw;
    raw.type = RawValue::Type::Unsigned;
    raw.unsigned_integer = v;
    return emit(std::move(raw));
  }
  bool number_float(number_float_t v, const string_t&) override {
    RawValue raw;
    raw.type = RawValue::Type::Double;
    raw.real = v;
    return emit(std::move(raw));
  }
  bool string(string_t& v) override {
    RawValue raw;
    raw.type = RawValue::Type::String;
    raw.string = v;
    return emit(std::move(raw));
  }
  bool binary(binary_t&) override { return false; }
  bool start_object(std::size_t) override { return push(RawValue::Type::Object); }
  bool key(string_t& v) override {
    pending_key_ = v;
    return true;
  }
  bool end_object() override { return pop(); }
  bool start_array(std::size_t) override { return push(RawValue::Type::Array); }
  bool end_array() override { return pop(); }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  // A container's key in its parent object must be pinned when the container
  // opens; nested members reuse pending_key_ before the container closes.
  struct Pending {
    RawValue value;
    std::string key;
  };

  bool push(RawValue::Type type) {
    Pending entry;
    entry.value.type = type;
    entry.key = std::move(pending_key_);
    stack_.push_back(std::move(entry));
    return true;
  }
  bool emit(RawValue value) { return emit(std::move(value), std::move(pending_key_)); }
  bool emit(RawValue value, std::string key) {
    if (stack_.empty()) {
      root = std::move(value);
      return true;
    }
    Pending& top = stack_.back();
    if (top.value.type == RawValue::Type::Array)
      top.value.items.push_back(std::move(value));
    else
      top.value.members.emplace_back(std::move(key), std::move(value));
    return true;
  }
  bool pop() {
    Pending done = std::move(stack_.back());
    stack_.pop_back();
    return emit(std::move(done.value), std::move(done.key));
  }

  std::vector<Pending> stack_;
  std::string pending_key_;
};

ordered_json raw_to_json(const RawValue& raw) {
  switch (raw.type) {
    case RawValue::Type::Null: return nullptr;
    case RawValue::Type::Boolean: return raw.boolean;
    case RawValue::Type::Integer: return raw.integer;
    case RawValue::Type::Unsigned: return raw.unsigned_integer;
    case RawValue::Type::Double: return raw.real;
    case RawValue::Type::String: return raw.string;
    case RawValue::Type::Array: {
      ordered_json out = ordered_json::array();
      for (const RawValue& item : raw.items) out.push_back(raw_to_json(item));
      return out;
    }
    case RawValue::Type::Object: {
      ordered_json out = ordered_json::object();
      for (const auto& [key, value] : raw.members)
        if (!out.contains(key)) out[key] = raw_to_json(value);  // first occurrence wins
      return out;
    }
  }
  return nullptr;
}

// Finds the matching close brace of text[open] honoring strings and escapes;
// npos when the braces never balance.
std::size_t balanced_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

// Turns a non-string element value into text. Strings pass through; null
// becomes empty (so the validator flags it); everything else keeps its JSON
// spelling.
std::string coerce_value(const RawValue& raw) {
  if (raw.type == RawValue::Type::String) return raw.string;
  if (raw.type == RawValue::Type::Null) return "";
  return raw_to_json(raw).dump();
}

FrameSet frames_from_raw(const RawValue& top, std::string_view region,
                         std::vector<std::string>& warnings) {
  std::size_t frames_keys = 0;
  for (const auto& [key, value] : top.members)
    if (key == "frames") ++frames_keys;
  if (frames_keys > 1) warnings.push_back("duplicate \"frames\" key; using the first");

  const RawValue* frames = top.find("frames");
  if (frames->type != RawValue::Type::Array)
    throw DeserializeError("\"frames\" is not an array", DeserializeError::Kind::SchemaShape,
                           excerpt_of(region));

  FrameSet out;
  for (std::size_t idx = 0; idx < frames->items.size(); ++idx) {
    const RawValue& entry = frames->items[idx];
    std::string where = "frames[" + std::to_string(idx) + "]";
    if (entry.type != RawValue::Type::Object) {
      warnings.push_back(where + " is not an object; skipped");
      continue;
    }
    std::size_t frame_keys = 0, element_keys = 0;
    for (const auto& [key, value] : entry.members) {
      if (key == "frame") ++frame_keys;
      if (key == "elements") ++element_keys;
    }
    if (frame_keys > 1) warnings.push_back(where + " repeats \"frame\"; using the first");
    if (element_keys > 1) warnings.push_back(where + " repeats \"elements\"; using the first");

    const RawValue* frame_name = entry.find("frame");
    if (!frame_name) {
      warnings.push_back(where + " has no \"frame\" name; skipped");
      continue;
    }
    FrameInstance instance;
    if (frame_name->type == RawValue::Type::String) {
      instance.name = frame_name->string;
    } else if (frame_name->type == RawValue::Type::Array ||
               frame_name->type == RawValue::Type::Object) {
      warnings.push_back(where + " has a non-text \"frame\" name; skipped");
      continue;
    } else {
      instance.name = coerce_value(*frame_name);
      warnings.push_back(where + " frame name was not a string; coerced to \"" + instance.name +
                         "\"");
    }

    const RawValue* elements = entry.find("elements");
    if (!elements) {
      warnings.push_back(where + " has no \"elements\" object");
    } else if (elements->type != RawValue::Type::Object) {
      warnings.push_back(where + " \"elements\" is not an object; treated as empty");
    } else {
      std::set<std::string> seen;
      for (const auto& [role, value] : elements->members) {
        if (!seen.insert(role).second) {
          warnings.push_back(where + " repeats element \"" + role + "\"; keeping the first value");
          continue;
        }
        if (value.type != RawValue::Type::String)
          warnings.push_back(where + " element \"" + role + "\" was not a string; coerced");
        instance.elements.emplace_back(role, coerce_value(value));
      }
    }
    out.frames.push_back(std::move(instance));
  }
  return out;
}

}  // namespace

std::string serialize(const FrameSet& frames) {
  ordered_json doc;
  doc["frames"] = ordered_json::array();
  for (const FrameInstance& frame : frames.frames) {
    ordered_json entry;
    entry["frame"] = frame.name;
    ordered_json elements = ordered_json::object();
    for (const auto& [role, value] : frame.elements) elements[role] = value;
    entry["elements"] = std::move(elements);
    doc["frames"].push_back(std::move(entry));
  }
  return doc.dump();
}

FrameSet deserialize(std::string_view text, std::vector<std::string>& warnings) {
  std::optional<std::string> first_parsed_region;
  for (std::size_t pos = text.find('{'); pos != std::string_view::npos;
       pos = text.find('{', pos + 1)) {
    std::size_t close = balanced_end(text, pos);
    if (close == std::string_view::npos) continue;
    std::string_view region = text.substr(pos, close - pos + 1);
    RawBuilder builder;
    if (!ordered_json::sax_parse(region, &builder)) continue;
    if (builder.root.type != RawValue::Type::Object) continue;
    if (!first_parsed_region) first_parsed_region = std::string(region);
    if (!builder.root.find("frames")) continue;
    return frames_from_raw(builder.root, region, warnings);
  }
  if (first_parsed_region)
    throw DeserializeError("JSON found but it holds no \"frames\" array",
                           DeserializeError::Kind::SchemaShape, excerpt_of(*first_parsed_region));
  throw DeserializeError("no JSON object found in the response",
                         DeserializeError::Kind::ExtractionFailure, excerpt_of(text));
}

std::vector<std::string> kv_pairs(const FrameSet& frames) {
  std::set<std::string> pairs;
  for (const FrameInstance& frame : frames.frames) {
    pairs.insert("frame=" + frame.name);
    for (const auto& [role, value] : frame.elements) pairs.insert(role + "=" + value);
  }
  return {pairs.begin(), pairs.end()};
}

FrameSchema load_schema(std::string_view text) {
  ordered_json doc = ordered_json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw SchemaError("schema is not valid JSON");
  if (!doc.is_object()) throw SchemaError("schema must be a JSON object");

  FrameSchema schema;
  for (const auto& [key, value] : doc.items()) {
    if (key == "element_rules") {
      if (!value.is_object()) throw SchemaError("element_rules must be an object");
      for (const auto& [frame, roles] : value.items()) {
        if (!roles.is_array()) throw SchemaError("element_rules entry \"" + frame +
                                                 "\" must be an array of role names");
        std::vector<std::string> role_list;
        for (const auto& role : roles) {
          if (!role.is_string())
            throw SchemaError("element_rules entry \"" + frame + "\" holds a non-string role");
          role_list.push_back(role.get<std::string>());
        }
        schema.element_rules.emplace_back(frame, std::move(role_list));
      }
    } else if (key == "element_key_remap") {
      if (!value.is_object()) throw SchemaError("element_key_remap must be an object");
      for (const auto& [alias, target] : value.items()) {
        if (!target.is_string())
          throw SchemaError("element_key_remap target for \"" + alias + "\" must be a string");
        schema.key_remap[alias] = target.get<std::string>();
      }
    } else if (key == "frame_synonyms") {
      if (!value.is_object()) throw SchemaError("frame_synonyms must be an object");
      for (const auto& [alias, target] : value.items()) {
        if (!target.is_string())
          throw SchemaError("frame_synonyms target for \"" + alias + "\" must be a string");
        schema.frame_synonyms[alias] = target.get<std::string>();
      }
    } else if (key == "filter_enabled") {
      if (!value.is_boolean()) throw SchemaError("filter_enabled must be a boolean");
      schema.filter_enabled = value.get<bool>();
    } else {
      throw SchemaError("unknown schema key \"" + key + "\"");
    }
  }

  if (schema.element_rules.empty()) throw SchemaError("element_rules must not be empty");
  std::set<std::string> frame_dups;
  for (const auto& [frame, roles] : schema.element_rules)
    if (!frame_dups.insert(frame).second)
      throw SchemaError("element_rules repeats frame \"" + frame + "\"");

  for (const auto& [alias, target] : schema.key_remap) {
    if (schema.key_remap.count(target))
      throw SchemaError("element_key_remap chains \"" + alias + "\" through \"" + target + "\"");
    bool known = false;
    for (const auto& [frame, roles] : schema.element_rules)
      if (std::find(roles.begin(), roles.end(), target) != roles.end()) {
        known = true;
        break;
      }
    if (!known)
      throw SchemaError("element_key_remap target \"" + target +
                        "\" is not an allowed role of any frame");
  }
  for (const auto& [alias, target] : schema.frame_synonyms) {
    if (schema.frame_synonyms.count(target))
      throw SchemaError("frame_synonyms chains \"" + alias + "\" through \"" + target + "\"");
    if (!schema.has_frame(target))
      throw SchemaError("frame_synonyms target \"" + target + "\" is not a schema frame");
    if (schema.has_frame(alias))
      throw SchemaError("frame synonym \"" + alias + "\" is itself a schema frame");
  }
  return schema;
}

}  // namespace framecmd
