#include "framecmd/earley.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace framecmd {
namespace {

bool terminal_matches(const Grammar& g, const Symbol& sym, const Token& token) {
  if (sym.kind == SymbolKind::Literal) return sym.name == token.text;
  return g.word_in_class(sym.name, token.text);
}

std::string render_terminal(const Symbol& sym) {
  if (sym.kind == SymbolKind::Literal) return "\"" + sym.name + "\"";
  return sym.name;
}

// Chart recognizer, also the source of no-parse diagnostics. Nullable
// nonterminals use the predict-time advance so empty completions landing
// before their consumers are never lost.
class Recognizer {
 public:
  Recognizer(const Grammar& g, const std::vector<Token>& tokens) : g_(g), tokens_(tokens) {}

  bool run() {
    compute_nullable();
    const std::size_t n = tokens_.size();
    chart_.assign(n + 1, {});
    seen_.assign(n + 1, {});
    if (auto it = g_.rules_by_lhs.find(g_.start_symbol); it != g_.rules_by_lhs.end())
      for (int r : it->second) add(0, {r, 0, 0});
    for (std::size_t k = 0; k <= n; ++k) {
      for (std::size_t idx = 0; idx < chart_[k].size(); ++idx) {
        Item item = chart_[k][idx];
        const Production& rule = g_.rules[item.rule];
        if (item.dot < rule.rhs.size()) {
          const Symbol& next = rule.rhs[item.dot];
          if (next.kind == SymbolKind::Nonterminal) {
            if (auto it = g_.rules_by_lhs.find(next.name); it != g_.rules_by_lhs.end())
              for (int r : it->second) add(k, {r, 0, k});
            if (nullable_.count(next.name)) add(k, {item.rule, item.dot + 1, item.origin});
          } else if (k < n && terminal_matches(g_, next, tokens_[k])) {
            add(k + 1, {item.rule, item.dot + 1, item.origin});
          }
        } else {
          for (std::size_t w = 0; w < chart_[item.origin].size(); ++w) {
            Item waiting = chart_[item.origin][w];
            const Production& wrule = g_.rules[waiting.rule];
            if (waiting.dot < wrule.rhs.size() &&
                wrule.rhs[waiting.dot].kind == SymbolKind::Nonterminal &&
                wrule.rhs[waiting.dot].name == rule.lhs)
              add(k, {waiting.rule, waiting.dot + 1, waiting.origin});
          }
        }
      }
    }
    for (const Item& item : chart_[n]) {
      const Production& rule = g_.rules[item.rule];
      if (rule.lhs == g_.start_symbol && item.dot == rule.rhs.size() && item.origin == 0)
        return true;
    }
    return false;
  }

  [[noreturn]] void throw_no_parse() const {
    std::size_t furthest = 0;
    for (std::size_t k = 0; k < chart_.size(); ++k)
      if (!chart_[k].empty()) furthest = k;
    std::set<std::string> expected_set;
    for (const Item& item : chart_[furthest]) {
      const Production& rule = g_.rules[item.rule];
      if (item.dot < rule.rhs.size() && rule.rhs[item.dot].kind != SymbolKind::Nonterminal)
        expected_set.insert(render_terminal(rule.rhs[item.dot]));
    }
    std::vector<std::string> expected(expected_set.begin(), expected_set.end());
    std::optional<std::string> token_text;
    if (furthest < tokens_.size()) token_text = tokens_[furthest].text;

    std::ostringstream os;
    if (token_text)
      os << "no parse at token " << furthest << " ('" << *token_text << "')";
    else
      os << "no parse at end of input";
    if (!expected.empty()) {
      os << "; expected: ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) os << ", ";
        os << expected[i];
      }
    }
    throw NoParseError(os.str(), furthest, std::move(token_text), std::move(expected));
  }

 private:
  struct Item {
    int rule;
    std::size_t dot;
    std::size_t origin;
  };

  void add(std::size_t pos, Item item) {
    if (seen_[pos].insert({item.rule, item.dot, item.origin}).second)
      chart_[pos].push_back(item);
  }

  void compute_nullable() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Production& rule : g_.rules) {
        if (nullable_.count(rule.lhs)) continue;
        bool all = true;
        for (const Symbol& sym : rule.rhs)
          if (sym.kind != SymbolKind::Nonterminal || !nullable_.count(sym.name)) {
            all = false;
            break;
          }
        if (all) {
          nullable_.insert(rule.lhs);
          changed = true;
        }
      }
    }
  }

  const Grammar& g_;
  const std::vector<Token>& tokens_;
  std::vector<std::vector<Item>> chart_;
  std::vector<std::set<std::tuple<int, std::size_t, std::size_t>>> seen_;
  std::set<std::string> nullable_;
};

// Pre-order comparison over production ids, leaves sorting first. Callers
// only compare trees of equal node count, where equal ids force equal
// shapes, so the simultaneous walk is well defined and 0 means identical.
int compare_trees(const ParseTree& a, const ParseTree& b) {
  int ida = a.production_id ? *a.production_id : -1;
  int idb = b.production_id ? *b.production_id : -1;
  if (ida != idb) return ida < idb ? -1 : 1;
  for (std::size_t k = 0; k < a.children.size() && k < b.children.size(); ++k)
    if (int r = compare_trees(a.children[k], b.children[k])) return r;
  if (a.children.size() != b.children.size())
    return a.children.size() < b.children.size() ? -1 : 1;
  return 0;
}

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

// Span DP over (nonterminal, i, j). Minimum node counts come from value
// iteration, which converges even through unit and epsilon cycles; the
// canonical tree is then assembled from canonical subtrees, which is sound
// because replacing any subtree of an optimal tree with a smaller-keyed
// equal-size one would produce a smaller-keyed whole.
class TreeBuilder {
 public:
  TreeBuilder(const Grammar& g, const std::vector<Token>& tokens) : g_(g), tokens_(tokens) {
    for (const Production& rule : g_.rules)
      if (!nt_ids_.count(rule.lhs)) {
        nt_ids_[rule.lhs] = static_cast<int>(nt_names_.size());
        nt_names_.push_back(rule.lhs);
      }
    n_ = tokens_.size();
    auto it = nt_ids_.find(g_.start_symbol);
    start_ = it == nt_ids_.end() ? -1 : it->second;
    cost_.assign(nt_names_.size() * (n_ + 1) * (n_ + 1), kInf);
    if (start_ >= 0) compute_costs();
  }

  bool derivable() const { return start_ >= 0 && cost_at(start_, 0, n_) < kInf; }

  ParseTree canonical() { return canon(start_, 0, n_); }

  std::vector<ParseTree> enumerate(std::size_t limit);

 private:
  std::int64_t cost_at(int nt, std::size_t i, std::size_t j) const {
    return cost_[(static_cast<std::size_t>(nt) * (n_ + 1) + i) * (n_ + 1) + j];
  }
  std::int64_t& cost_at(int nt, std::size_t i, std::size_t j) {
    return cost_[(static_cast<std::size_t>(nt) * (n_ + 1) + i) * (n_ + 1) + j];
  }

  std::int64_t sym_cost(const Symbol& sym, std::size_t i, std::size_t j) const {
    if (sym.kind == SymbolKind::Nonterminal) {
      auto it = nt_ids_.find(sym.name);
      return it == nt_ids_.end() ? kInf : cost_at(it->second, i, j);
    }
    if (j != i + 1 || !terminal_matches(g_, sym, tokens_[i])) return kInf;
    return 1;
  }

  void compute_costs() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Production& rule : g_.rules) {
        int lhs = nt_ids_.at(rule.lhs);
        const std::size_t m = rule.rhs.size();
        for (std::size_t i = 0; i <= n_; ++i) {
          // f[p] = min node count of the first k symbols covering [i, p)
          std::vector<std::int64_t> f(n_ + 1, kInf), next(n_ + 1, kInf);
          f[i] = 0;
          for (std::size_t k = 0; k < m; ++k) {
            std::fill(next.begin(), next.end(), kInf);
            for (std::size_t q = i; q <= n_; ++q) {
              if (f[q] >= kInf) continue;
              for (std::size_t p = q; p <= n_; ++p) {
                std::int64_t c = sym_cost(rule.rhs[k], q, p);
                if (c >= kInf) continue;
                next[p] = std::min(next[p], f[q] + c);
              }
            }
            f.swap(next);
          }
          for (std::size_t j = i; j <= n_; ++j) {
            if (f[j] >= kInf) continue;
            std::int64_t total = f[j] + 1;
            if (total < cost_at(lhs, i, j)) {
              cost_at(lhs, i, j) = total;
              changed = true;
            }
          }
        }
      }
    }
  }

  std::string covered(std::size_t i, std::size_t j) const {
    std::string out;
    for (std::size_t k = i; k < j; ++k) {
      if (k > i) out += ' ';
      out += tokens_[k].text;
    }
    return out;
  }

  ParseTree leaf_for(const Symbol& sym, std::size_t i) const {
    ParseTree leaf;
    leaf.symbol = sym.name;
    leaf.covered_text = tokens_[i].text;
    return leaf;
  }

  using SpanList = std::vector<std::pair<std::size_t, std::size_t>>;

  // All consecutive subspan assignments of rule.rhs over [i, j) whose child
  // costs sum exactly to target (by the min-cost table).
  void for_splits(const Production& rule, std::size_t i, std::size_t j, std::int64_t target,
                  const std::function<void(const SpanList&)>& sink) {
    SpanList spans;
    std::function<void(std::size_t, std::size_t, std::int64_t)> step = [&](std::size_t k,
                                                                           std::size_t q,
                                                                           std::int64_t acc) {
      const std::size_t m = rule.rhs.size();
      if (k == m) {
        if (q == j && acc == target) sink(spans);
        return;
      }
      std::int64_t floor_rest = static_cast<std::int64_t>(m - k - 1);
      for (std::size_t p = q; p <= j; ++p) {
        std::int64_t c = sym_cost(rule.rhs[k], q, p);
        if (c >= kInf || acc + c + floor_rest > target) continue;
        spans.emplace_back(q, p);
        step(k + 1, p, acc + c);
        spans.pop_back();
      }
    };
    step(0, i, 0);
  }

  // Splits whose children are all derivable, regardless of total cost.
  void for_any_splits(const Production& rule, std::size_t i, std::size_t j,
                      const std::function<void(const SpanList&)>& sink) {
    SpanList spans;
    std::function<void(std::size_t, std::size_t)> step = [&](std::size_t k, std::size_t q) {
      if (k == rule.rhs.size()) {
        if (q == j) sink(spans);
        return;
      }
      for (std::size_t p = q; p <= j; ++p) {
        if (sym_cost(rule.rhs[k], q, p) >= kInf) continue;
        spans.emplace_back(q, p);
        step(k + 1, p);
        spans.pop_back();
      }
    };
    step(0, i);
  }

  ParseTree canon(int nt, std::size_t i, std::size_t j) {
    auto key = std::make_tuple(nt, i, j);
    if (auto it = canon_memo_.find(key); it != canon_memo_.end()) return it->second;

    std::int64_t target = cost_at(nt, i, j) - 1;
    std::optional<ParseTree> best;
    for (int r : g_.rules_by_lhs.at(nt_names_[nt])) {
      const Production& rule = g_.rules[r];
      for_splits(rule, i, j, target, [&](const SpanList& spans) {
        ParseTree cand;
        cand.symbol = rule.lhs;
        cand.production_id = rule.id;
        cand.covered_text = covered(i, j);
        for (std::size_t k = 0; k < rule.rhs.size(); ++k) {
          const Symbol& sym = rule.rhs[k];
          if (sym.kind == SymbolKind::Nonterminal)
            cand.children.push_back(canon(nt_ids_.at(sym.name), spans[k].first, spans[k].second));
          else
            cand.children.push_back(leaf_for(sym, spans[k].first));
        }
        if (!best || compare_trees(cand, *best) < 0) best = std::move(cand);
      });
    }
    if (!best) throw Error("internal: chart accepted a span the builder cannot derive");
    canon_memo_.emplace(key, *best);
    return *best;
  }

  // All distinct trees of (nt, i, j) using exactly `nodes` tree nodes.
  const std::vector<ParseTree>& exact(int nt, std::size_t i, std::size_t j, std::int64_t nodes) {
    auto key = std::make_tuple(nt, i, j, nodes);
    if (auto it = exact_memo_.find(key); it != exact_memo_.end()) return it->second;
    std::vector<ParseTree> out;
    if (nodes >= 1 && cost_at(nt, i, j) <= nodes) {
      for (int r : g_.rules_by_lhs.at(nt_names_[nt])) {
        const Production& rule = g_.rules[r];
        const std::size_t m = rule.rhs.size();
        std::vector<ParseTree> prefix;
        std::function<void(std::size_t, std::size_t, std::int64_t)> step =
            [&](std::size_t k, std::size_t q, std::int64_t budget) {
              if (k == m) {
                if (q == j && budget == 0) {
                  ParseTree t;
                  t.symbol = rule.lhs;
                  t.production_id = rule.id;
                  t.children = prefix;
                  t.covered_text = covered(i, j);
                  out.push_back(std::move(t));
                }
                return;
              }
              std::int64_t floor_rest = static_cast<std::int64_t>(m - k - 1);
              const Symbol& sym = rule.rhs[k];
              if (sym.kind != SymbolKind::Nonterminal) {
                if (q < j && budget - 1 >= floor_rest && sym_cost(sym, q, q + 1) < kInf) {
                  prefix.push_back(leaf_for(sym, q));
                  step(k + 1, q + 1, budget - 1);
                  prefix.pop_back();
                }
                return;
              }
              int child = nt_ids_.count(sym.name) ? nt_ids_.at(sym.name) : -1;
              if (child < 0) return;
              for (std::size_t p = q; p <= j; ++p) {
                std::int64_t lo = cost_at(child, q, p);
                if (lo >= kInf) continue;
                for (std::int64_t c = lo; c <= budget - floor_rest; ++c) {
                  for (const ParseTree& sub : exact(child, q, p, c)) {
                    prefix.push_back(sub);
                    step(k + 1, p, budget - c);
                    prefix.pop_back();
                  }
                }
              }
            };
        step(0, i, nodes - 1);
      }
    }
    return exact_memo_.emplace(key, std::move(out)).first->second;
  }

  // Largest node count over all parses, valid only for acyclic (finite)
  // forests; usefulness restricts the walk to spans reachable from the root.
  std::int64_t max_cost(int nt, std::size_t i, std::size_t j,
                        std::map<std::tuple<int, std::size_t, std::size_t>, std::int64_t>& memo) {
    auto key = std::make_tuple(nt, i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::int64_t best = 0;
    for (int r : g_.rules_by_lhs.at(nt_names_[nt])) {
      const Production& rule = g_.rules[r];
      for_any_splits(rule, i, j, [&](const SpanList& spans) {
        std::int64_t total = 1;
        for (std::size_t k = 0; k < rule.rhs.size(); ++k) {
          const Symbol& sym = rule.rhs[k];
          if (sym.kind == SymbolKind::Nonterminal)
            total += max_cost(nt_ids_.at(sym.name), spans[k].first, spans[k].second, memo);
          else
            total += 1;
        }
        best = std::max(best, total);
      });
    }
    memo[key] = best;
    return best;
  }

  // True when some useful span can derive itself again, i.e. the parse
  // forest is infinite. Same-span edges are the only possible cycles.
  bool has_cycle() {
    using Node = std::tuple<int, std::size_t, std::size_t>;
    std::map<Node, std::vector<Node>> same_span;
    std::set<Node> useful;
    std::vector<Node> queue{{start_, 0, n_}};
    useful.insert(queue.front());
    while (!queue.empty()) {
      auto [nt, i, j] = queue.back();
      queue.pop_back();
      for (int r : g_.rules_by_lhs.at(nt_names_[nt])) {
        const Production& rule = g_.rules[r];
        for_any_splits(rule, i, j, [&](const SpanList& spans) {
          for (std::size_t k = 0; k < rule.rhs.size(); ++k) {
            const Symbol& sym = rule.rhs[k];
            if (sym.kind != SymbolKind::Nonterminal) continue;
            Node child{nt_ids_.at(sym.name), spans[k].first, spans[k].second};
            if (spans[k].first == i && spans[k].second == j)
              same_span[{nt, i, j}].push_back(child);
            if (useful.insert(child).second) queue.push_back(child);
          }
        });
      }
    }
    std::map<Node, int> color;  // 0 new, 1 active, 2 done
    std::function<bool(const Node&)> dfs = [&](const Node& node) {
      int& c = color[node];
      if (c == 1) return true;
      if (c == 2) return false;
      c = 1;
      if (auto it = same_span.find(node); it != same_span.end())
        for (const Node& next : it->second)
          if (dfs(next)) return true;
      c = 2;
      return false;
    };
    for (const Node& node : useful)
      if (dfs(node)) return true;
    return false;
  }

  const Grammar& g_;
  const std::vector<Token>& tokens_;
  std::size_t n_ = 0;
  int start_ = -1;
  std::map<std::string, int> nt_ids_;
  std::vector<std::string> nt_names_;
  std::vector<std::int64_t> cost_;
  std::map<std::tuple<int, std::size_t, std::size_t>, ParseTree> canon_memo_;
  std::map<std::tuple<int, std::size_t, std::size_t, std::int64_t>, std::vector<ParseTree>>
      exact_memo_;
};

std::vector<ParseTree> TreeBuilder::enumerate(std::size_t limit) {
  std::vector<ParseTree> out;
  if (!derivable() || limit == 0) return out;

  std::int64_t ceiling = kInf;
  if (!has_cycle()) {
    std::map<std::tuple<int, std::size_t, std::size_t>, std::int64_t> memo;
    ceiling = max_cost(start_, 0, n_, memo);
  }
  for (std::int64_t c = cost_at(start_, 0, n_); c <= ceiling && out.size() < limit; ++c) {
    std::vector<ParseTree> batch = exact(start_, 0, n_, c);
    std::sort(batch.begin(), batch.end(),
              [](const ParseTree& a, const ParseTree& b) { return compare_trees(a, b) < 0; });
    for (ParseTree& t : batch) {
      out.push_back(std::move(t));
      if (out.size() == limit) break;
    }
  }
  return out;
}

}  // namespace

ParseTree parse(const Grammar& grammar, const std::vector<Token>& tokens) {
  Recognizer recognizer(grammar, tokens);
  if (!recognizer.run()) recognizer.throw_no_parse();
  TreeBuilder builder(grammar, tokens);
  if (!builder.derivable()) throw Error("internal: chart and span table disagree");
  return builder.canonical();
}

std::vector<ParseTree> enumerate_parses(const Grammar& grammar, const std::vector<Token>& tokens,
                                        std::size_t limit) {
  TreeBuilder builder(grammar, tokens);
  return builder.enumerate(limit);
}

}  // namespace framecmd
