#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "framecmd/errors.hpp"

namespace framecmd {

enum class SymbolKind {
  Nonterminal,  // lowercase bare name, expanded by productions
  WordClass,    // UPPERCASE bare name, matches any word in its lexicon entry
  Literal,      // quoted string, matches exactly one token
};

struct Symbol {
  SymbolKind kind = SymbolKind::Nonterminal;
  std::string name;  // nonterminal/word-class name, or the literal word itself

  bool operator==(const Symbol&) const = default;
};

/// One role binding of a frame annotation. The capture is either a 1-based
/// right-hand-side position (the covered text of that subtree becomes the
/// value) or a fixed literal string.
struct Binding {
  std::string role;
  std::variant<std::size_t, std::string> capture;
};

struct FrameAnnotation {
  std::string frame;
  std::vector<Binding> bindings;
};

struct Production {
  int id = 0;
  std::string lhs;
  std::vector<Symbol> rhs;  // empty means epsilon
  std::optional<FrameAnnotation> annotation;
};

/// Context-free grammar with word-class lexicons and per-production frame
/// annotations. Immutable after load_grammar(); safe to share across threads.
struct Grammar {
  std::vector<Production> rules;
  std::string start_symbol;
  std::map<std::string, std::set<std::string>> lexicon;  // word class -> words
  std::set<std::string> frame_names;

  // lhs -> indices into rules, built at load time
  std::map<std::string, std::vector<int>> rules_by_lhs;

  bool word_in_class(const std::string& word_class, const std::string& word) const {
    auto it = lexicon.find(word_class);
    return it != lexicon.end() && it->second.count(word) > 0;
  }
};

/// Grammar-file problem, with 1-based line/column of the offending text.
class GrammarError : public Error {
 public:
  GrammarError(const std::string& message, std::size_t line, std::size_t column)
      : Error(message), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct Token {
  std::string text;        // lowercased, punctuation-stripped
  std::size_t begin = 0;   // character offset into the original sentence
  std::size_t end = 0;     // one past the last character

  bool operator==(const Token&) const = default;
};

/// Parses the line-oriented grammar file format and checks all grammar
/// invariants. Throws GrammarError on any violation.
Grammar load_grammar(std::string_view text);

/// Lowercases, strips leading/trailing punctuation per word, drops words that
/// become empty. Total and deterministic.
std::vector<Token> tokenize(std::string_view sentence);

}  // namespace framecmd
