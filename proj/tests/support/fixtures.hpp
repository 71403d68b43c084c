#pragma once

#include <string>
#include <vector>

#include "framecmd/frames.hpp"
#include "framecmd/grammar.hpp"

namespace testsupport {

/// Trimmed schema the unit tests share; role lists match the bundled one.
inline const char* kSmallSchemaText = R"json({
  "element_rules": {
    "Taking": ["Theme", "Agent", "Source", "Purpose", "Manner"],
    "Bringing": ["Theme", "Beneficiary", "Goal", "Agent", "Source", "Area", "Manner"],
    "Motion": ["Goal", "Theme", "Source", "Path", "Distance", "Direction", "Manner"],
    "Closing": ["Containing_object", "Agent", "Degree", "Manner"]
  },
  "element_key_remap": {
    "Containing_portal": "Containing_object",
    "Destination": "Goal"
  },
  "frame_synonyms": {
    "Grabbing": "Taking",
    "Going": "Motion"
  },
  "filter_enabled": true
})json";

inline framecmd::FrameSchema small_schema() { return framecmd::load_schema(kSmallSchemaText); }

/// Three-rule grammar from the take/bring command domain.
inline const char* kCmdNpGrammarText = R"(
TAKE_V = take | grab
DET = the | a
NOUN = laptop | book

start: cmd ;
cmd: TAKE_V np ;
np: DET NOUN ;
)";

/// Two-command grammar with frame annotations and a conjunction.
inline const char* kTwoCommandGrammarText = R"(
TAKE_V = take | grab
BRING_V = bring | carry
DET = the | a
NOUN = laptop | book | couch

start: cmd ;
cmd: act | act "and" cmd ;
act: taking | bringing ;
taking: TAKE_V np @frame(Taking){Theme=2} ;
bringing: BRING_V np "to" np @frame(Bringing){Theme=2, Goal=4} ;
np: DET NOUN ;
)";

inline std::vector<framecmd::Token> toks(std::initializer_list<const char*> words) {
  std::vector<framecmd::Token> out;
  std::size_t at = 0;
  for (const char* w : words) {
    framecmd::Token t;
    t.text = w;
    t.begin = at;
    t.end = at + t.text.size();
    out.push_back(std::move(t));
    at = out.back().end + 1;
  }
  return out;
}

inline framecmd::FrameInstance frame(std::string name,
                                     std::vector<std::pair<std::string, std::string>> elements) {
  framecmd::FrameInstance out;
  out.name = std::move(name);
  out.elements = std::move(elements);
  return out;
}

}  // namespace testsupport
