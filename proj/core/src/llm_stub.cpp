#include <optional>

#include "framecmd/frames.hpp"
#include "framecmd/grammar.hpp"
#include "framecmd/llm.hpp"

namespace framecmd {
namespace {

struct FeedbackView {
  std::string sentence;
  std::string previous;
  std::string errors;
};

std::optional<std::string> section(const std::string& text, const std::string& label,
                                   const std::string& next_label) {
  std::size_t at = text.find(label);
  if (at == std::string::npos) return std::nullopt;
  std::size_t begin = at + label.size();
  std::size_t end = text.find(next_label, begin);
  if (end == std::string::npos) return std::nullopt;
  return text.substr(begin, end - begin);
}

std::optional<FeedbackView> parse_feedback(const std::string& user) {
  if (user.rfind("Original instruction:\n", 0) != 0) return std::nullopt;
  auto sentence = section(user, "Original instruction:\n", "\n\nPrevious response:\n");
  auto previous = section(user, "\n\nPrevious response:\n", "\n\nValidation errors:\n");
  auto errors = section(user, "\n\nValidation errors:\n", "\n\nValid action frames:\n");
  if (!sentence || !previous || !errors) return std::nullopt;
  return FeedbackView{*sentence, *previous, *errors};
}

std::optional<std::string> quoted_at(const std::string& line, std::size_t from) {
  std::size_t open = line.find('"', from);
  if (open == std::string::npos) return std::nullopt;
  std::size_t close = line.find('"', open + 1);
  if (close == std::string::npos) return std::nullopt;
  return line.substr(open + 1, close - open - 1);
}

struct Corrections {
  std::vector<std::string> drop_frames;
  std::vector<std::pair<std::string, std::string>> drop_elements;  // (frame, role)
  bool rederive = false;
};

Corrections read_corrections(const std::string& errors) {
  Corrections fixes;
  std::size_t pos = 0;
  while (pos < errors.size()) {
    std::size_t eol = errors.find('\n', pos);
    if (eol == std::string::npos) eol = errors.size();
    std::string line = errors.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.rfind("- unknown frame ", 0) == 0) {
      if (auto name = quoted_at(line, 0)) fixes.drop_frames.push_back(*name);
    } else if (line.rfind("- unknown element ", 0) == 0 ||
               line.rfind("- empty value for element ", 0) == 0) {
      auto role = quoted_at(line, 0);
      if (!role) continue;
      std::size_t in_frame = line.find(" in frame ");
      if (in_frame == std::string::npos) continue;
      if (auto frame = quoted_at(line, in_frame)) fixes.drop_elements.emplace_back(*frame, *role);
    } else if (line.rfind("- malformed structure:", 0) == 0 ||
               line.rfind("- no JSON object found", 0) == 0) {
      fixes.rederive = true;
    }
  }
  return fixes;
}

FrameSet apply_corrections(const FrameSet& previous, const Corrections& fixes) {
  FrameSet out;
  for (const FrameInstance& frame : previous.frames) {
    bool dropped = false;
    for (const std::string& name : fixes.drop_frames)
      if (name == frame.name) {
        dropped = true;
        break;
      }
    if (dropped) continue;
    FrameInstance kept;
    kept.name = frame.name;
    for (const auto& [role, value] : frame.elements) {
      bool removed = false;
      for (const auto& [f, r] : fixes.drop_elements)
        if (f == frame.name && r == role) {
          removed = true;
          break;
        }
      if (!removed) kept.elements.emplace_back(role, value);
    }
    out.frames.push_back(std::move(kept));
  }
  return out;
}

void add_words(FrameInstance& frame, const std::string& role, const std::string& word) {
  for (auto& [r, v] : frame.elements)
    if (r == role) {
      v += ' ';
      v += word;
      return;
    }
  frame.elements.emplace_back(role, word);
}

std::optional<FrameInstance> apply_rules(const std::vector<StubRule>& rules,
                                         const std::vector<std::string>& words) {
  for (const StubRule& rule : rules) {
    std::size_t verb = words.size();
    for (std::size_t i = 0; i < words.size(); ++i)
      if (rule.verbs.count(words[i])) {
        verb = i;
        break;
      }
    if (verb == words.size()) continue;
    if (rule.needs_preposition) {
      bool found = false;
      for (std::size_t i = verb + 1; i < words.size() && !found; ++i)
        for (const auto& [preps, role] : rule.preps)
          if (preps.count(words[i])) {
            found = true;
            break;
          }
      if (!found) continue;
    }
    FrameInstance frame;
    frame.name = rule.frame;
    std::string role = rule.object_role;
    bool state_taken = false;
    for (std::size_t i = verb + 1; i < words.size(); ++i) {
      const std::string& w = words[i];
      if (!rule.state_role.empty() && !state_taken && (w == "on" || w == "off")) {
        frame.elements.emplace_back(rule.state_role, w);
        state_taken = true;
        continue;
      }
      bool is_prep = false;
      for (const auto& [preps, prep_role] : rule.preps)
        if (preps.count(w)) {
          role = prep_role;
          is_prep = true;
          break;
        }
      if (is_prep) continue;
      if (rule.skip_words.count(w) || w == "please") continue;
      if (!role.empty()) add_words(frame, role, w);
    }
    return frame;
  }
  return std::nullopt;
}

FrameSet derive(const std::vector<StubRule>& rules, const std::string& sentence) {
  std::vector<Token> tokens = tokenize(sentence);
  FrameSet out;
  std::vector<std::string> clause;
  auto flush = [&] {
    if (clause.empty()) return;
    if (auto frame = apply_rules(rules, clause)) out.frames.push_back(std::move(*frame));
    clause.clear();
  };
  for (const Token& token : tokens) {
    if (token.text == "and" || token.text == "then") {
      flush();
      continue;
    }
    clause.push_back(token.text);
  }
  flush();
  return out;
}

}  // namespace

std::string StubBackend::complete(const ChatPrompt& prompt, const DecodingParams&) {
  if (auto feedback = parse_feedback(prompt.user)) {
    Corrections fixes = read_corrections(feedback->errors);
    std::vector<std::string> sink;
    FrameSet previous;
    bool parsed = false;
    if (!fixes.rederive) {
      try {
        previous = deserialize(feedback->previous, sink);
        parsed = true;
      } catch (const DeserializeError&) {
      }
    }
    FrameSet corrected =
        parsed ? apply_corrections(previous, fixes) : derive(rules_, feedback->sentence);
    return serialize(corrected);
  }
  return serialize(derive(rules_, prompt.user));
}

std::vector<StubRule> StubBackend::default_rules() {
  std::vector<StubRule> rules;
  rules.push_back({"Bringing",
                   {"bring", "carry", "deliver", "take"},
                   "Theme",
                   {{{"to"}, "Goal"}, {{"for"}, "Beneficiary"}},
                   true,
                   "",
                   {}});
  rules.push_back({"Taking",
                   {"take", "grab", "grasp", "pick", "fetch", "get"},
                   "Theme",
                   {},
                   false,
                   "",
                   {"up"}});
  rules.push_back({"Motion",
                   {"go", "move", "walk", "navigate", "drive", "head"},
                   "",
                   {{{"to", "into"}, "Goal"}},
                   true,
                   "",
                   {}});
  rules.push_back({"Placing",
                   {"put", "place", "set", "lay"},
                   "Theme",
                   {{{"on", "onto", "in", "into"}, "Goal"}},
                   true,
                   "",
                   {"down"}});
  rules.push_back({"Opening", {"open"}, "Containing_object", {}, false, "", {}});
  rules.push_back({"Closing", {"close", "shut"}, "Containing_object", {}, false, "", {}});
  rules.push_back({"Searching",
                   {"search", "scan"},
                   "Ground",
                   {{{"for"}, "Phenomenon"}},
                   false,
                   "",
                   {}});
  rules.push_back({"Locating",
                   {"find", "locate"},
                   "Phenomenon",
                   {{{"in"}, "Ground"}},
                   false,
                   "",
                   {}});
  rules.push_back({"Inspecting", {"inspect", "check", "examine"}, "Ground", {}, false, "", {}});
  rules.push_back({"Following",
                   {"follow", "accompany"},
                   "Cotheme",
                   {{{"to"}, "Goal"}},
                   false,
                   "",
                   {}});
  rules.push_back({"Releasing", {"release", "drop"}, "Theme", {}, false, "", {}});
  rules.push_back({"Entering", {"enter"}, "Goal", {}, false, "", {}});
  rules.push_back({"Giving",
                   {"give", "hand"},
                   "Theme",
                   {{{"to"}, "Recipient"}},
                   false,
                   "",
                   {}});
  rules.push_back({"Attaching",
                   {"attach", "connect", "plug"},
                   "Item",
                   {{{"to"}, "Goal"}},
                   false,
                   "",
                   {}});
  rules.push_back({"Change_operational_state",
                   {"turn", "switch"},
                   "Device",
                   {},
                   false,
                   "Operational_state",
                   {}});
  return rules;
}

}  // namespace framecmd
