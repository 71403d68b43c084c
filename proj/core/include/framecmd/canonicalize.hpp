#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "framecmd/earley.hpp"
#include "framecmd/frames.hpp"
#include "framecmd/grammar.hpp"

namespace framecmd {

/// Collects the frame annotations of a parse tree in pre-order. A binding to
/// a right-hand-side position captures that subtree's covered text.
FrameSet tree_to_frames(const Grammar& grammar, const ParseTree& tree);

/// Rewrites frame names through schema.frame_synonyms. Unknown names pass
/// through untouched.
FrameSet apply_synonyms(const FrameSet& frames, const FrameSchema& schema);

/// Rewrites element keys through schema.key_remap. When a remap lands on a
/// role the frame already has, the existing value wins and the collision is
/// reported as a warning.
FrameSet remap_keys(const FrameSet& frames, const FrameSchema& schema,
                    std::vector<std::string>& warnings);

struct FilterResult {
  FrameSet frames;
  std::vector<std::pair<std::size_t, std::string>> dropped;  // (frame index, role)
};

/// Drops elements whose role the schema does not allow for their frame.
/// Frames unknown to the schema keep all their elements.
FilterResult filter_elements(const FrameSet& frames, const FrameSchema& schema);

/// Full rewrite pass: synonyms, then key remap, then (if filter_on) element
/// filtering. Collision and drop notes append to warnings.
FrameSet canonicalize(const FrameSet& frames, const FrameSchema& schema, bool filter_on,
                      std::vector<std::string>& warnings);

}  // namespace framecmd
