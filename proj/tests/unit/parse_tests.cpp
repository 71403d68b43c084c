#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "framecmd/earley.hpp"
#include "framecmd/grammar.hpp"

using namespace framecmd;
using testsupport::toks;

TEST_CASE("one-token language parses to a two-node tree") {
  Grammar g = load_grammar("start: \"go\" ;");
  ParseTree tree = parse(g, toks({"go"}));
  CHECK(tree.symbol == "start");
  CHECK(tree.covered_text == "go");
  REQUIRE(tree.children.size() == 1);
  CHECK(tree.children[0].is_leaf());
  CHECK(tree.children[0].covered_text == "go");
}

TEST_CASE("take-the-laptop parses to the expected shape") {
  Grammar g = load_grammar(testsupport::kCmdNpGrammarText);
  ParseTree tree = parse(g, toks({"take", "the", "laptop"}));
  CHECK(tree.symbol == "start");
  CHECK(tree.covered_text == "take the laptop");
  REQUIRE(tree.children.size() == 1);

  const ParseTree& cmd = tree.children[0];
  CHECK(cmd.symbol == "cmd");
  REQUIRE(cmd.children.size() == 2);
  CHECK(cmd.children[0].symbol == "TAKE_V");
  CHECK(cmd.children[0].is_leaf());
  CHECK(cmd.children[0].covered_text == "take");

  const ParseTree& np = cmd.children[1];
  CHECK(np.symbol == "np");
  CHECK(np.covered_text == "the laptop");
  REQUIRE(np.children.size() == 2);
  CHECK(np.children[0].symbol == "DET");
  CHECK(np.children[1].symbol == "NOUN");
}

TEST_CASE("scrambled word order fails at the offending token") {
  Grammar g = load_grammar(testsupport::kCmdNpGrammarText);
  try {
    parse(g, toks({"take", "laptop", "the"}));
    FAIL("expected NoParseError");
  } catch (const NoParseError& e) {
    CHECK(e.position() == 1);
    REQUIRE(e.token_text().has_value());
    CHECK(*e.token_text() == "laptop");
    CHECK(e.expected() == std::vector<std::string>{"DET"});
    CHECK(std::string(e.what()) == "no parse at token 1 ('laptop'); expected: DET");
  }
}

TEST_CASE("truncated input fails at end of input") {
  Grammar g = load_grammar(testsupport::kCmdNpGrammarText);
  try {
    parse(g, toks({"take", "the"}));
    FAIL("expected NoParseError");
  } catch (const NoParseError& e) {
    CHECK(e.position() == 2);
    CHECK_FALSE(e.token_text().has_value());
    CHECK(e.expected() == std::vector<std::string>{"NOUN"});
    CHECK(std::string(e.what()) == "no parse at end of input; expected: NOUN");
  }
}

TEST_CASE("out-of-lexicon token reports the scannable alternatives") {
  Grammar g = load_grammar(testsupport::kCmdNpGrammarText);
  try {
    parse(g, toks({"discard", "the", "laptop"}));
    FAIL("expected NoParseError");
  } catch (const NoParseError& e) {
    CHECK(e.position() == 0);
    CHECK(e.expected() == std::vector<std::string>{"TAKE_V"});
  }
}

TEST_CASE("empty input against a nonempty language is a position-zero no-parse") {
  Grammar g = load_grammar("start: \"go\" ;");
  CHECK_THROWS_AS(parse(g, {}), NoParseError);
  CHECK(enumerate_parses(g, {}, 8).empty());
}

TEST_CASE("a nullable grammar accepts the empty input") {
  Grammar g = load_grammar("start: opt ;\nopt: \"o\" | ;");
  ParseTree tree = parse(g, {});
  CHECK(tree.symbol == "start");
  CHECK(tree.covered_text == "");
  REQUIRE(tree.children.size() == 1);
  CHECK(tree.children[0].children.empty());
  CHECK_FALSE(tree.children[0].is_leaf());  // epsilon expansion, not a terminal
}

TEST_CASE("parse is deterministic") {
  Grammar g = load_grammar(testsupport::kTwoCommandGrammarText);
  auto tokens = toks({"take", "the", "laptop", "and", "bring", "the", "book", "to", "the", "couch"});
  CHECK(parse(g, tokens) == parse(g, tokens));
}

TEST_CASE("root covered_text joins the tokens") {
  Grammar g = load_grammar(testsupport::kTwoCommandGrammarText);
  auto tokens = toks({"grab", "a", "book"});
  CHECK(parse(g, tokens).covered_text == "grab a book");
}

TEST_CASE("unambiguous recursion yields exactly one parse") {
  Grammar g = load_grammar("start: a ;\na: \"x\" a | \"x\" ;");
  auto parses = enumerate_parses(g, toks({"x", "x"}), 100);
  REQUIRE(parses.size() == 1);
  CHECK(parses[0] == parse(g, toks({"x", "x"})));
}

TEST_CASE("the two-way ambiguous split is enumerated in canonical order") {
  Grammar g = load_grammar("start: a a ;\na: \"x\" | \"x\" \"x\" ;");
  auto tokens = toks({"x", "x", "x"});
  auto parses = enumerate_parses(g, tokens, 100);
  REQUIRE(parses.size() == 2);
  CHECK(parses[0] == parse(g, tokens));
  CHECK(parses[0] != parses[1]);
  for (const ParseTree& tree : parses) CHECK(tree.covered_text == "x x x");

  // Both trees have six nodes; the tie-break picks the lower production id at
  // the first differing pre-order node, so the canonical left child is a->"x".
  CHECK(parses[0].children[0].children.size() == 1);
  CHECK(parses[1].children[0].children.size() == 2);

  auto only_first = enumerate_parses(g, tokens, 1);
  REQUIRE(only_first.size() == 1);
  CHECK(only_first[0] == parses[0]);
}

TEST_CASE("epsilon productions parse optional words on both sides") {
  Grammar g = load_grammar("start: opt \"w\" opt ;\nopt: \"o\" | ;");
  for (auto tokens : {toks({"w"}), toks({"o", "w"}), toks({"w", "o"}), toks({"o", "w", "o"})}) {
    ParseTree tree = parse(g, tokens);
    REQUIRE(tree.children.size() == 3);
  }
  CHECK_THROWS_AS(parse(g, toks({"o", "o"})), NoParseError);
  CHECK_THROWS_AS(parse(g, toks({"w", "w"})), NoParseError);
}

TEST_CASE("nullable neighbors create genuine ambiguity") {
  // x x "m" with nullable x: the single "a" of "a m" may come from either x.
  Grammar g = load_grammar("start: x x \"m\" ;\nx: \"a\" | ;");
  CHECK(enumerate_parses(g, toks({"m"}), 10).size() == 1);
  CHECK(enumerate_parses(g, toks({"a", "m"}), 10).size() == 2);
  CHECK(enumerate_parses(g, toks({"a", "a", "m"}), 10).size() == 1);
}

TEST_CASE("left recursion parses flat repetition") {
  Grammar g = load_grammar("start: s ;\ns: s \"y\" | \"y\" ;");
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<Token> tokens;
    for (std::size_t i = 0; i < n; ++i) {
      Token t;
      t.text = "y";
      t.begin = 2 * i;
      t.end = 2 * i + 1;
      tokens.push_back(t);
    }
    CHECK(enumerate_parses(g, tokens, 50).size() == 1);
  }
}

TEST_CASE("a derivation cycle yields the canonically smallest trees first") {
  Grammar g = load_grammar("start: s ;\ns: s | \"x\" ;");
  ParseTree smallest = parse(g, toks({"x"}));
  CHECK(smallest.node_count() == 3);  // start -> s -> leaf

  auto parses = enumerate_parses(g, toks({"x"}), 4);
  REQUIRE(parses.size() == 4);  // unboundedly many exist; the limit cuts off
  CHECK(parses[0] == smallest);
  for (std::size_t i = 1; i < parses.size(); ++i) {
    CHECK(parses[i].covered_text == "x");
    CHECK(parses[i - 1].node_count() <= parses[i].node_count());
  }
}

TEST_CASE("word classes scan any word of their lexicon") {
  Grammar g = load_grammar(testsupport::kCmdNpGrammarText);
  CHECK(parse(g, toks({"grab", "a", "book"})).covered_text == "grab a book");
  CHECK_THROWS_AS(parse(g, toks({"fetch", "a", "book"})), NoParseError);
}
