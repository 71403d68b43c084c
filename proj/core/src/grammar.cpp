#include "framecmd/grammar.hpp"

#include <cctype>
#include <sstream>
#include <utility>

namespace framecmd {
namespace {

enum class MetaKind {
  Ident,
  Number,
  String,
  Colon,
  Semi,
  Pipe,
  Equals,
  At,
  LParen,
  RParen,
  LBrace,
  RBrace,
  Comma,
  Newline,
  End,
};

struct MetaToken {
  MetaKind kind;
  std::string text;
  std::size_t line;
  std::size_t col;
};

[[noreturn]] void fail(const std::string& message, std::size_t line, std::size_t col) {
  std::ostringstream os;
  os << "grammar:" << line << ":" << col << ": " << message;
  throw GrammarError(os.str(), line, col);
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<MetaToken> lex(std::string_view text) {
  std::vector<MetaToken> out;
  std::size_t line = 1, col = 1;
  std::size_t i = 0;
  auto push = [&](MetaKind kind, std::string word, std::size_t l, std::size_t c) {
    out.push_back({kind, std::move(word), l, c});
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      push(MetaKind::Newline, "\n", line, col);
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      ++col;
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;  // newline handled above; col is stale but unused until then
    }
    std::size_t tl = line, tc = col;
    if (c == '"') {
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != '"' && text[j] != '\n') ++j;
      if (j >= text.size() || text[j] == '\n') fail("unterminated string literal", tl, tc);
      push(MetaKind::String, std::string(text.substr(i + 1, j - i - 1)), tl, tc);
      col += j - i + 1;
      i = j + 1;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      push(MetaKind::Ident, std::string(text.substr(i, j - i)), tl, tc);
      col += j - i;
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      push(MetaKind::Number, std::string(text.substr(i, j - i)), tl, tc);
      col += j - i;
      i = j;
      continue;
    }
    MetaKind kind;
    switch (c) {
      case ':': kind = MetaKind::Colon; break;
      case ';': kind = MetaKind::Semi; break;
      case '|': kind = MetaKind::Pipe; break;
      case '=': kind = MetaKind::Equals; break;
      case '@': kind = MetaKind::At; break;
      case '(': kind = MetaKind::LParen; break;
      case ')': kind = MetaKind::RParen; break;
      case '{': kind = MetaKind::LBrace; break;
      case '}': kind = MetaKind::RBrace; break;
      case ',': kind = MetaKind::Comma; break;
      default: fail(std::string("unexpected character '") + c + "'", tl, tc);
    }
    push(kind, std::string(1, c), tl, tc);
    ++i;
    ++col;
  }
  out.push_back({MetaKind::End, "", line, col});
  return out;
}

bool all_upper_name(const std::string& s) {
  bool has_alpha = false;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      has_alpha = true;
      if (!std::isupper(static_cast<unsigned char>(c))) return false;
    }
  }
  return has_alpha;
}

bool all_lower_name(const std::string& s) {
  bool has_alpha = false;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      has_alpha = true;
      if (!std::islower(static_cast<unsigned char>(c))) return false;
    }
  }
  return has_alpha;
}

struct PlacedSymbol {
  Symbol symbol;
  std::size_t line;
  std::size_t col;
};

struct ProtoRule {
  std::string lhs;
  std::vector<PlacedSymbol> rhs;
  std::optional<FrameAnnotation> annotation;
  std::size_t ann_line = 0;
  std::size_t ann_col = 0;
};

class FileParser {
 public:
  explicit FileParser(std::vector<MetaToken> tokens) : tokens_(std::move(tokens)) {}

  Grammar run() {
    std::vector<ProtoRule> protos;
    std::map<std::string, std::set<std::string>> lexicon;
    std::vector<std::pair<std::string, std::size_t>> class_defs;  // name, line (dup check)

    while (!at(MetaKind::End)) {
      if (at(MetaKind::Newline)) {
        advance();
        continue;
      }
      const MetaToken& name = expect(MetaKind::Ident, "statement name");
      if (at(MetaKind::Equals)) {
        parse_word_class(name, lexicon, class_defs);
      } else if (at(MetaKind::Colon)) {
        parse_production(name, protos);
      } else {
        fail("expected '=' or ':' after '" + name.text + "'", peek().line, peek().col);
      }
    }
    return finish(std::move(protos), std::move(lexicon));
  }

 private:
  const MetaToken& peek() const { return tokens_[pos_]; }
  bool at(MetaKind kind) const { return peek().kind == kind; }
  const MetaToken& advance() { return tokens_[pos_++]; }
  const MetaToken& expect(MetaKind kind, const std::string& what) {
    if (!at(kind)) fail("expected " + what, peek().line, peek().col);
    return advance();
  }
  void skip_newlines() {
    while (at(MetaKind::Newline)) advance();
  }

  void parse_word_class(const MetaToken& name, std::map<std::string, std::set<std::string>>& lexicon,
                        std::vector<std::pair<std::string, std::size_t>>& class_defs) {
    if (!all_upper_name(name.text))
      fail("word-class name '" + name.text + "' must be uppercase", name.line, name.col);
    for (const auto& [existing, _] : class_defs)
      if (existing == name.text)
        fail("duplicate word-class definition '" + name.text + "'", name.line, name.col);
    class_defs.emplace_back(name.text, name.line);
    advance();  // '='
    std::set<std::string>& words = lexicon[name.text];
    while (true) {
      if (at(MetaKind::Ident) || at(MetaKind::String)) {
        words.insert(advance().text);
      } else {
        fail("expected a word in word-class '" + name.text + "'", peek().line, peek().col);
      }
      if (at(MetaKind::Pipe)) {
        advance();
        continue;
      }
      break;
    }
    if (!at(MetaKind::Newline) && !at(MetaKind::End))
      fail("unexpected text after word-class definition", peek().line, peek().col);
  }

  void parse_production(const MetaToken& name, std::vector<ProtoRule>& protos) {
    if (!all_lower_name(name.text))
      fail("production name '" + name.text + "' must be lowercase", name.line, name.col);
    advance();  // ':'
    while (true) {
      ProtoRule proto;
      proto.lhs = name.text;
      skip_newlines();
      while (true) {
        if (at(MetaKind::String)) {
          const MetaToken& t = advance();
          proto.rhs.push_back({{SymbolKind::Literal, t.text}, t.line, t.col});
        } else if (at(MetaKind::Ident)) {
          const MetaToken& t = advance();
          SymbolKind kind;
          if (all_upper_name(t.text)) {
            kind = SymbolKind::WordClass;
          } else if (all_lower_name(t.text)) {
            kind = SymbolKind::Nonterminal;
          } else {
            fail("mixed-case symbol '" + t.text + "'", t.line, t.col);
          }
          proto.rhs.push_back({{kind, t.text}, t.line, t.col});
        } else if (at(MetaKind::Newline)) {
          advance();  // productions may wrap; ';' ends them
        } else {
          break;
        }
      }
      if (at(MetaKind::At)) parse_annotation(proto);
      skip_newlines();
      protos.push_back(std::move(proto));
      if (at(MetaKind::Pipe)) {
        advance();
        continue;
      }
      expect(MetaKind::Semi, "';' at end of production");
      break;
    }
  }

  void parse_annotation(ProtoRule& proto) {
    const MetaToken& atTok = advance();  // '@'
    proto.ann_line = atTok.line;
    proto.ann_col = atTok.col;
    const MetaToken& kw = expect(MetaKind::Ident, "'frame' after '@'");
    if (kw.text != "frame") fail("expected 'frame' after '@'", kw.line, kw.col);
    expect(MetaKind::LParen, "'('");
    FrameAnnotation ann;
    ann.frame = expect(MetaKind::Ident, "frame name").text;
    expect(MetaKind::RParen, "')'");
    expect(MetaKind::LBrace, "'{'");
    if (!at(MetaKind::RBrace)) {
      while (true) {
        const MetaToken& role = expect(MetaKind::Ident, "role name");
        expect(MetaKind::Equals, "'=' after role name");
        Binding binding;
        binding.role = role.text;
        if (at(MetaKind::Number)) {
          binding.capture = static_cast<std::size_t>(std::stoull(advance().text));
        } else if (at(MetaKind::String)) {
          binding.capture = advance().text;
        } else {
          fail("expected a position or string for role '" + role.text + "'", peek().line,
               peek().col);
        }
        for (const auto& other : ann.bindings)
          if (other.role == binding.role)
            fail("duplicate role '" + binding.role + "' in annotation", role.line, role.col);
        ann.bindings.push_back(std::move(binding));
        if (at(MetaKind::Comma)) {
          advance();
          continue;
        }
        break;
      }
    }
    expect(MetaKind::RBrace, "'}'");
    proto.annotation = std::move(ann);
  }

  Grammar finish(std::vector<ProtoRule> protos, std::map<std::string, std::set<std::string>> lexicon) {
    if (protos.empty()) fail("grammar has no productions", peek().line, peek().col);

    Grammar g;
    g.lexicon = std::move(lexicon);
    std::set<std::string> defined;
    for (const auto& proto : protos) defined.insert(proto.lhs);

    for (auto& proto : protos) {
      Production rule;
      rule.id = static_cast<int>(g.rules.size());
      rule.lhs = proto.lhs;
      for (auto& placed : proto.rhs) {
        if (placed.symbol.kind == SymbolKind::Nonterminal && !defined.count(placed.symbol.name))
          fail("undefined nonterminal '" + placed.symbol.name + "'", placed.line, placed.col);
        if (placed.symbol.kind == SymbolKind::WordClass && !g.lexicon.count(placed.symbol.name))
          fail("word class '" + placed.symbol.name + "' has no definition", placed.line,
               placed.col);
        rule.rhs.push_back(std::move(placed.symbol));
      }
      if (proto.annotation) {
        for (const auto& binding : proto.annotation->bindings) {
          if (const auto* pos = std::get_if<std::size_t>(&binding.capture)) {
            if (*pos == 0 || *pos > rule.rhs.size())
              fail("capture position " + std::to_string(*pos) + " out of range for role '" +
                       binding.role + "'",
                   proto.ann_line, proto.ann_col);
          }
        }
        g.frame_names.insert(proto.annotation->frame);
        rule.annotation = std::move(proto.annotation);
      }
      g.rules_by_lhs[rule.lhs].push_back(rule.id);
      g.rules.push_back(std::move(rule));
    }

    g.start_symbol = defined.count("start") ? "start" : g.rules.front().lhs;
    return g;
  }

  std::vector<MetaToken> tokens_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kStrip = ".,!?;:\"'()";

}  // namespace

Grammar load_grammar(std::string_view text) { return FileParser(lex(text)).run(); }

std::vector<Token> tokenize(std::string_view sentence) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    if (std::isspace(static_cast<unsigned char>(sentence[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[j]))) ++j;
    std::size_t begin = i, end = j;
    while (begin < end && kStrip.find(sentence[begin]) != std::string_view::npos) ++begin;
    while (end > begin && kStrip.find(sentence[end - 1]) != std::string_view::npos) --end;
    if (begin < end) {
      Token token;
      token.begin = begin;
      token.end = end;
      token.text.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k)
        token.text.push_back(
            static_cast<char>(std::tolower(static_cast<unsigned char>(sentence[k]))));
      out.push_back(std::move(token));
    }
    i = j;
  }
  return out;
}

}  // namespace framecmd
