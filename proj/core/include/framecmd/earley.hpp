#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "framecmd/grammar.hpp"

namespace framecmd {

/// Parse tree node. A node without production_id is a terminal leaf; its
/// symbol is the word-class name or the literal text it matched.
struct ParseTree {
  std::string symbol;
  std::optional<int> production_id;
  std::vector<ParseTree> children;
  std::string covered_text;  // spanned token texts joined by single spaces

  bool is_leaf() const { return !production_id.has_value(); }
  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.node_count();
    return n;
  }
  bool operator==(const ParseTree&) const = default;
};

/// Input rejected by the grammar. Reports the furthest chart position the
/// recognizer reached and the terminals that could have continued there;
/// what() carries the rendered diagnostic used by feedback prompts.
class NoParseError : public Error {
 public:
  NoParseError(const std::string& message, std::size_t position,
               std::optional<std::string> token_text, std::vector<std::string> expected)
      : Error(message),
        position_(position),
        token_text_(std::move(token_text)),
        expected_(std::move(expected)) {}

  std::size_t position() const { return position_; }
  const std::optional<std::string>& token_text() const { return token_text_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::optional<std::string> token_text_;  // offending token, absent at end of input
  std::vector<std::string> expected_;
};

/// Earley parse of the full token sequence rooted at the start symbol.
/// Ambiguity resolves to the canonical tree: fewest total nodes, then lowest
/// production id at the first differing node of a simultaneous pre-order walk.
/// Throws NoParseError when the sequence is not in the language.
ParseTree parse(const Grammar& grammar, const std::vector<Token>& tokens);

/// Up to `limit` distinct complete parses in canonical order; all of them
/// when fewer exist. Empty result exactly when parse() would throw.
/// Grammars with derivation cycles have unboundedly many trees; enumeration
/// then still yields the canonically first `limit` of them.
std::vector<ParseTree> enumerate_parses(const Grammar& grammar, const std::vector<Token>& tokens,
                                        std::size_t limit);

}  // namespace framecmd
