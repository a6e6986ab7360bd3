#pragma once

// Combinatorial specifications: AST, textual DSL, well-foundedness checks.
//
//   spec   := defn+
//   defn   := NAME '=' expr ';'
//   expr   := term ('+' term)*
//   term   := factor ('*' factor)*
//   factor := 'atom' | 'eps' | NAME | 'seq' '(' expr ')'
//           | 'mset2' '(' expr ')' | '(' expr ')'
//
// `#` starts a comment running to the end of the line.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anasamp/errors.hpp"

namespace anasamp {

enum class ExprKind : std::uint8_t { Atom, Epsilon, Ref, Union, Product, Seq, MSet2 };

struct Expr {
  ExprKind kind = ExprKind::Atom;
  std::string name;         // Ref only
  std::vector<Expr> args;   // Union/Product: n >= 2, Seq/MSet2: exactly 1

  static Expr atom() { return Expr{ExprKind::Atom, {}, {}}; }
  static Expr eps() { return Expr{ExprKind::Epsilon, {}, {}}; }
  static Expr ref(std::string n) { return Expr{ExprKind::Ref, std::move(n), {}}; }
  static Expr sum(std::vector<Expr> xs) { return Expr{ExprKind::Union, {}, std::move(xs)}; }
  static Expr prod(std::vector<Expr> xs) { return Expr{ExprKind::Product, {}, std::move(xs)}; }
  static Expr seq(Expr x) { return Expr{ExprKind::Seq, {}, {std::move(x)}}; }
  static Expr mset2(Expr x) { return Expr{ExprKind::MSet2, {}, {std::move(x)}}; }

  friend bool operator==(const Expr&, const Expr&) = default;
};

struct Definition {
  std::string name;
  Expr body;

  friend bool operator==(const Definition&, const Definition&) = default;
};

/// A named system of classes, kept in definition order.
class CombSpec {
 public:
  /// Throws DomainError on a duplicate name. The parser reports duplicates
  /// itself, with a position.
  void define(std::string name, Expr body) {
    if (index_of(name)) throw DomainError("duplicate class definition '" + name + "'");
    defs_.push_back(Definition{std::move(name), std::move(body)});
  }

  const std::vector<Definition>& definitions() const noexcept { return defs_; }
  std::size_t size() const noexcept { return defs_.size(); }
  bool empty() const noexcept { return defs_.empty(); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < defs_.size(); ++i)
      if (defs_[i].name == name) return i;
    return std::nullopt;
  }

  const Expr& body(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw DomainError("undefined class '" + std::string(name) + "'");
    return defs_[*i].body;
  }

  friend bool operator==(const CombSpec&, const CombSpec&) = default;

 private:
  std::vector<Definition> defs_;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class SpecParser {
 public:
  explicit SpecParser(std::string_view text) : text_(text) {}

  CombSpec parse() {
    CombSpec spec;
    skip_blank();
    if (at_end()) fail("expected at least one definition");
    while (!at_end()) {
      const auto line = line_, col = col_;
      std::string name = expect_name();
      if (name == "atom" || name == "eps" || name == "seq" || name == "mset2")
        throw ParseError("'" + name + "' is reserved and cannot name a class", line, col);
      if (spec.index_of(name))
        throw ParseError("duplicate class definition '" + name + "'", line, col);
      expect('=');
      Expr body = parse_expr();
      expect(';');
      spec.define(std::move(name), std::move(body));
      skip_blank();
    }
    return spec;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;

  bool at_end() const { return pos_ >= text_.size(); }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (!at_end()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (!at_end() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  bool peek(char c) {
    skip_blank();
    return !at_end() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) {
      if (at_end()) fail(std::string("expected '") + c + "' but reached end of input");
      fail(std::string("expected '") + c + "' but found '" + text_[pos_] + "'");
    }
    advance();
  }

  static bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
  }

  std::string expect_name() {
    skip_blank();
    if (at_end()) fail("expected a class name but reached end of input");
    if (!name_start(text_[pos_])) fail(std::string("expected a class name but found '") + text_[pos_] + "'");
    std::string out;
    while (!at_end() && name_char(text_[pos_])) {
      out.push_back(text_[pos_]);
      advance();
    }
    return out;
  }

  Expr parse_expr() {
    std::vector<Expr> terms;
    terms.push_back(parse_term());
    while (peek('+')) {
      advance();
      terms.push_back(parse_term());
    }
    if (terms.size() == 1) return std::move(terms.front());
    return Expr::sum(std::move(terms));
  }

  Expr parse_term() {
    std::vector<Expr> factors;
    factors.push_back(parse_factor());
    while (peek('*')) {
      advance();
      factors.push_back(parse_factor());
    }
    if (factors.size() == 1) return std::move(factors.front());
    return Expr::prod(std::move(factors));
  }

  Expr parse_factor() {
    if (peek('(')) {
      advance();
      Expr inner = parse_expr();
      expect(')');
      return inner;
    }
    std::string word = expect_name();
    if (word == "atom") return Expr::atom();
    if (word == "eps") return Expr::eps();
    if (word == "seq" || word == "mset2") {
      expect('(');
      Expr inner = parse_expr();
      expect(')');
      return word == "seq" ? Expr::seq(std::move(inner)) : Expr::mset2(std::move(inner));
    }
    return Expr::ref(std::move(word));
  }
};

}  // namespace detail

/// Parses DSL text. Throws ParseError with the offending position.
inline CombSpec parse_spec(std::string_view text) { return detail::SpecParser(text).parse(); }

// ---------------------------------------------------------------------------
// Printing

inline void print_expr(std::ostream& os, const Expr& e) {
  auto child = [&os](const Expr& c, bool wrap) {
    if (wrap) os << '(';
    print_expr(os, c);
    if (wrap) os << ')';
  };
  switch (e.kind) {
    case ExprKind::Atom: os << "atom"; break;
    case ExprKind::Epsilon: os << "eps"; break;
    case ExprKind::Ref: os << e.name; break;
    case ExprKind::Union:
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << " + ";
        child(e.args[i], e.args[i].kind == ExprKind::Union);
      }
      break;
    case ExprKind::Product:
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << " * ";
        const auto k = e.args[i].kind;
        child(e.args[i], k == ExprKind::Union || k == ExprKind::Product);
      }
      break;
    case ExprKind::Seq:
      os << "seq(";
      print_expr(os, e.args.front());
      os << ')';
      break;
    case ExprKind::MSet2:
      os << "mset2(";
      print_expr(os, e.args.front());
      os << ')';
      break;
  }
}

inline std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e);
  return os.str();
}

inline std::string to_string(const CombSpec& spec) {
  std::ostringstream os;
  for (const auto& d : spec.definitions()) {
    os << d.name << " = ";
    print_expr(os, d.body);
    os << ";\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Validation

/// Minimal object size; `kInfiniteSize` marks a class with no finite object.
inline constexpr std::uint64_t kInfiniteSize = std::numeric_limits<std::uint64_t>::max();

enum class IssueKind : std::uint8_t { UndefinedRef, NonPointed, EpsilonCycle };

inline std::string_view to_string(IssueKind k) {
  switch (k) {
    case IssueKind::UndefinedRef: return "undefined-ref";
    case IssueKind::NonPointed: return "non-pointed";
    case IssueKind::EpsilonCycle: return "epsilon-cycle";
  }
  return "unknown";
}

struct SpecIssue {
  IssueKind kind;
  std::string class_name;
  std::string message;
};

struct ValidationReport {
  std::vector<std::pair<std::string, std::uint64_t>> minsize;  // definition order
  std::vector<SpecIssue> errors;

  bool accepted() const noexcept { return errors.empty(); }

  std::uint64_t minsize_of(std::string_view cls) const {
    for (const auto& [n, m] : minsize)
      if (n == cls) return m;
    throw DomainError("undefined class '" + std::string(cls) + "'");
  }
};

namespace detail {

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  if (a == kInfiniteSize || b == kInfiniteSize || a > kInfiniteSize - 1 - b) return kInfiniteSize;
  return a + b;
}

/// Minimal size of an expression under the current class estimates.
/// Unknown references count as infinite.
inline std::uint64_t expr_minsize(const Expr& e, const CombSpec& spec,
                                  const std::vector<std::uint64_t>& cls) {
  switch (e.kind) {
    case ExprKind::Atom: return 1;
    case ExprKind::Epsilon: return 0;
    case ExprKind::Ref: {
      auto i = spec.index_of(e.name);
      return i ? cls[*i] : kInfiniteSize;
    }
    case ExprKind::Union: {
      std::uint64_t m = kInfiniteSize;
      for (const auto& a : e.args) m = std::min(m, expr_minsize(a, spec, cls));
      return m;
    }
    case ExprKind::Product: {
      std::uint64_t m = 0;
      for (const auto& a : e.args) m = sat_add(m, expr_minsize(a, spec, cls));
      return m;
    }
    case ExprKind::Seq: return 0;
    case ExprKind::MSet2: {
      const auto m = expr_minsize(e.args.front(), spec, cls);
      return sat_add(m, m);
    }
  }
  return kInfiniteSize;
}

inline void collect_undefined(const Expr& e, const CombSpec& spec, std::set<std::string>& out) {
  if (e.kind == ExprKind::Ref && !spec.index_of(e.name)) out.insert(e.name);
  for (const auto& a : e.args) collect_undefined(a, spec, out);
}

/// Seq/MSet2 arguments that can be empty.
inline void collect_empty_args(const Expr& e, const CombSpec& spec,
                               const std::vector<std::uint64_t>& cls, std::vector<std::string>& out) {
  if ((e.kind == ExprKind::Seq || e.kind == ExprKind::MSet2) &&
      expr_minsize(e.args.front(), spec, cls) == 0)
    out.push_back(to_string(e));
  for (const auto& a : e.args) collect_empty_args(a, spec, cls, out);
}

/// Classes reachable from `e` without consuming any atom.
inline void zero_offset_refs(const Expr& e, const CombSpec& spec,
                             const std::vector<std::uint64_t>& cls, std::set<std::size_t>& out) {
  switch (e.kind) {
    case ExprKind::Atom:
    case ExprKind::Epsilon:
    case ExprKind::MSet2:  // the other member of the pair has size >= 1
      return;
    case ExprKind::Ref:
      if (auto i = spec.index_of(e.name)) out.insert(*i);
      return;
    case ExprKind::Union:
    case ExprKind::Seq:
      for (const auto& a : e.args) zero_offset_refs(a, spec, cls, out);
      return;
    case ExprKind::Product:
      for (std::size_t j = 0; j < e.args.size(); ++j) {
        bool others_empty = true;
        for (std::size_t k = 0; k < e.args.size() && others_empty; ++k)
          if (k != j && expr_minsize(e.args[k], spec, cls) != 0) others_empty = false;
        if (others_empty) zero_offset_refs(e.args[j], spec, cls, out);
      }
      return;
  }
}

}  // namespace detail

/// Computes minimal sizes by least-fixpoint iteration on the (min, +)
/// semiring and reports undefined references, classes with no finite
/// object, and recursion that can loop without consuming an atom.
inline ValidationReport validate_spec(const CombSpec& spec) {
  const auto& defs = spec.definitions();
  const std::size_t n = defs.size();
  ValidationReport report;

  std::vector<std::uint64_t> ms(n, kInfiniteSize);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto m = detail::expr_minsize(defs[i].body, spec, ms);
      if (m < ms[i]) {
        ms[i] = m;
        changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) report.minsize.emplace_back(defs[i].name, ms[i]);

  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> undefined;
    detail::collect_undefined(defs[i].body, spec, undefined);
    for (const auto& u : undefined)
      report.errors.push_back({IssueKind::UndefinedRef, defs[i].name,
                               "class '" + defs[i].name + "' references undefined class '" + u + "'"});
  }
  for (std::size_t i = 0; i < n; ++i)
    if (ms[i] == kInfiniteSize)
      report.errors.push_back({IssueKind::NonPointed, defs[i].name,
                               "class '" + defs[i].name + "' admits no finite object"});

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> empty_args;
    detail::collect_empty_args(defs[i].body, spec, ms, empty_args);
    for (const auto& e : empty_args)
      report.errors.push_back({IssueKind::EpsilonCycle, defs[i].name,
                               "argument of '" + e + "' in class '" + defs[i].name +
                                   "' admits the empty object"});
  }

  // Unguarded recursion: a cycle in the zero-offset reference graph.
  std::vector<std::set<std::size_t>> edges(n);
  for (std::size_t i = 0; i < n; ++i) detail::zero_offset_refs(defs[i].body, spec, ms, edges[i]);
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<bool> on_cycle(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    if (state[s]) continue;
    std::vector<std::pair<std::size_t, std::set<std::size_t>::const_iterator>> stack;
    stack.emplace_back(s, edges[s].begin());
    state[s] = 1;
    while (!stack.empty()) {
      auto& [v, it] = stack.back();
      if (it == edges[v].end()) {
        state[v] = 2;
        stack.pop_back();
        continue;
      }
      const std::size_t w = *it++;
      if (state[w] == 1) {
        for (auto r = stack.rbegin(); r != stack.rend(); ++r) {
          on_cycle[r->first] = true;
          if (r->first == w) break;
        }
      } else if (state[w] == 0) {
        state[w] = 1;
        stack.emplace_back(w, edges[w].begin());
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (on_cycle[i])
      report.errors.push_back({IssueKind::EpsilonCycle, defs[i].name,
                               "class '" + defs[i].name +
                                   "' recurses into itself without consuming an atom"});
  return report;
}

// ---------------------------------------------------------------------------
// Compiled form shared by the numerical modules.

struct GrammarNode {
  ExprKind kind;
  std::uint32_t ref = 0;              // class index for Ref
  std::vector<std::uint32_t> kids;    // always smaller indices than the node
};

/// Flat, index-based view of a validated specification. Children precede
/// parents, so ascending index order is a valid bottom-up evaluation order.
class Grammar {
 public:
  explicit Grammar(const CombSpec& spec) : spec_(spec) {
    auto report = validate_spec(spec);
    if (!report.accepted()) throw DomainError("invalid specification: " + report.errors.front().message);
    for (const auto& d : spec.definitions()) names_.push_back(d.name);
    for (const auto& [_, m] : report.minsize) minsize_.push_back(m);
    for (const auto& d : spec.definitions()) roots_.push_back(compile(d.body));

    // Classes whose values are needed at squared arguments.
    needs_levels_.assign(names_.size(), false);
    std::vector<std::uint32_t> work;
    for (const auto& n : nodes_)
      if (n.kind == ExprKind::MSet2) collect_refs(n.kids.front(), work);
    while (!work.empty()) {
      const auto c = work.back();
      work.pop_back();
      if (needs_levels_[c]) continue;
      needs_levels_[c] = true;
      collect_refs(roots_[c], work);
    }
  }

  const CombSpec& spec() const noexcept { return spec_; }
  std::size_t class_count() const noexcept { return names_.size(); }
  const std::vector<std::string>& class_names() const noexcept { return names_; }
  const std::string& class_name(std::size_t c) const { return names_.at(c); }
  std::uint32_t root(std::size_t c) const { return roots_.at(c); }
  std::uint64_t minsize(std::size_t c) const { return minsize_.at(c); }
  const std::vector<GrammarNode>& nodes() const noexcept { return nodes_; }
  const GrammarNode& node(std::uint32_t i) const { return nodes_.at(i); }

  /// True when the class is reachable from inside some mset2 argument and so
  /// must be evaluated at z^(2^i) for i > 0.
  bool needs_levels(std::size_t c) const { return needs_levels_.at(c); }
  bool has_mset2() const {
    return std::any_of(needs_levels_.begin(), needs_levels_.end(), [](bool b) { return b; });
  }

  std::size_t class_index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    throw DomainError("undefined class '" + std::string(name) + "'");
  }

 private:
  CombSpec spec_;
  std::vector<std::string> names_;
  std::vector<std::uint64_t> minsize_;
  std::vector<std::uint32_t> roots_;
  std::vector<GrammarNode> nodes_;
  std::vector<bool> needs_levels_;

  std::uint32_t compile(const Expr& e) {
    GrammarNode n{e.kind, 0, {}};
    if (e.kind == ExprKind::Ref) n.ref = static_cast<std::uint32_t>(*spec_.index_of(e.name));
    for (const auto& a : e.args) n.kids.push_back(compile(a));
    nodes_.push_back(std::move(n));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  void collect_refs(std::uint32_t i, std::vector<std::uint32_t>& out) const {
    const auto& n = nodes_[i];
    if (n.kind == ExprKind::Ref) out.push_back(n.ref);
    for (auto k : n.kids) collect_refs(k, out);
  }
};

}  // namespace anasamp
