#include "framecmd/canonicalize.hpp"

#include <functional>

namespace framecmd {
namespace {

void collect(const Grammar& grammar, const ParseTree& node, FrameSet& out) {
  if (!node.is_leaf()) {
    const Production& rule = grammar.rules[*node.production_id];
    if (rule.annotation) {
      FrameInstance instance;
      instance.name = rule.annotation->frame;
      for (const Binding& binding : rule.annotation->bindings) {
        if (const auto* pos = std::get_if<std::size_t>(&binding.capture))
          instance.elements.emplace_back(binding.role, node.children[*pos - 1].covered_text);
        else
          instance.elements.emplace_back(binding.role, std::get<std::string>(binding.capture));
      }
      out.frames.push_back(std::move(instance));
    }
  }
  for (const ParseTree& child : node.children) collect(grammar, child, out);
}

}  // namespace

FrameSet tree_to_frames(const Grammar& grammar, const ParseTree& tree) {
  FrameSet out;
  collect(grammar, tree, out);
  return out;
}

FrameSet apply_synonyms(const FrameSet& frames, const FrameSchema& schema) {
  FrameSet out = frames;
  for (FrameInstance& frame : out.frames)
    if (auto it = schema.frame_synonyms.find(frame.name); it != schema.frame_synonyms.end())
      frame.name = it->second;
  return out;
}

FrameSet remap_keys(const FrameSet& frames, const FrameSchema& schema,
                    std::vector<std::string>& warnings) {
  FrameSet out;
  for (const FrameInstance& frame : frames.frames) {
    FrameInstance mapped;
    mapped.name = frame.name;
    for (const auto& [role, value] : frame.elements) {
      auto it = schema.key_remap.find(role);
      const std::string& target = it == schema.key_remap.end() ? role : it->second;
      if (mapped.value_of(target)) {
        warnings.push_back("remapping \"" + role + "\" to \"" + target + "\" collides in frame \"" +
                           frame.name + "\"; keeping the earlier value");
        continue;
      }
      mapped.elements.emplace_back(target, value);
    }
    out.frames.push_back(std::move(mapped));
  }
  return out;
}

FilterResult filter_elements(const FrameSet& frames, const FrameSchema& schema) {
  FilterResult result;
  for (std::size_t idx = 0; idx < frames.frames.size(); ++idx) {
    const FrameInstance& frame = frames.frames[idx];
    if (!schema.has_frame(frame.name)) {
      result.frames.frames.push_back(frame);
      continue;
    }
    FrameInstance kept;
    kept.name = frame.name;
    for (const auto& [role, value] : frame.elements) {
      if (schema.role_allowed(frame.name, role))
        kept.elements.emplace_back(role, value);
      else
        result.dropped.emplace_back(idx, role);
    }
    result.frames.frames.push_back(std::move(kept));
  }
  return result;
}

FrameSet canonicalize(const FrameSet& frames, const FrameSchema& schema, bool filter_on,
                      std::vector<std::string>& warnings) {
  FrameSet out = remap_keys(apply_synonyms(frames, schema), schema, warnings);
  if (!filter_on) return out;
  FilterResult filtered = filter_elements(out, schema);
  for (const auto& [idx, role] : filtered.dropped)
    warnings.push_back("filtered element \"" + role + "\" from frame \"" +
                       filtered.frames.frames[idx].name + "\"");
  return std::move(filtered.frames);
}

}  // namespace framecmd
