#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "anasamp/spec.hpp"

using namespace anasamp;

namespace {

bool has_issue(const ValidationReport& r, IssueKind k, const std::string& cls) {
  for (const auto& e : r.errors)
    if (e.kind == k && e.class_name == cls) return true;
  return false;
}

// Random ASTs over the names in `names`, depth-bounded.
Expr random_expr(std::mt19937_64& rng, const std::vector<std::string>& names, int depth) {
  const int leaf_kinds = 3;
  const int pick = static_cast<int>(rng() % (depth > 0 ? 7 : leaf_kinds));
  switch (pick) {
    case 0: return Expr::atom();
    case 1: return Expr::eps();
    case 2: return Expr::ref(names[rng() % names.size()]);
    case 3:
    case 4: {
      std::vector<Expr> xs;
      const int n = 2 + static_cast<int>(rng() % 3);
      for (int i = 0; i < n; ++i) xs.push_back(random_expr(rng, names, depth - 1));
      return pick == 3 ? Expr::sum(std::move(xs)) : Expr::prod(std::move(xs));
    }
    case 5: return Expr::seq(random_expr(rng, names, depth - 1));
    default: return Expr::mset2(random_expr(rng, names, depth - 1));
  }
}

CombSpec random_spec(std::mt19937_64& rng) {
  const std::vector<std::string> names = {"A", "B_1", "tree"};
  const std::size_t n = 1 + rng() % names.size();
  CombSpec s;
  for (std::size_t i = 0; i < n; ++i) s.define(names[i], random_expr(rng, names, 4));
  return s;
}

}  // namespace

TEST(Parse, BinaryTrees) {
  const auto s = parse_spec("B = atom + atom*B*B;");
  ASSERT_EQ(s.size(), 1u);
  const Expr expected =
      Expr::sum({Expr::atom(), Expr::prod({Expr::atom(), Expr::ref("B"), Expr::ref("B")})});
  EXPECT_EQ(s.body("B"), expected);
}

TEST(Parse, Epsilon) {
  const auto s = parse_spec("E = eps;");
  EXPECT_EQ(s.body("E"), Expr::eps());
}

TEST(Parse, Otter) {
  const auto s = parse_spec("V = atom + mset2(V);");
  EXPECT_EQ(s.body("V"), Expr::sum({Expr::atom(), Expr::mset2(Expr::ref("V"))}));
}

TEST(Parse, CommentsAndWhitespace) {
  const auto s = parse_spec("# plane trees\n  T =\tatom * seq( T ) ; # trailing\n");
  EXPECT_EQ(s.body("T"), Expr::prod({Expr::atom(), Expr::seq(Expr::ref("T"))}));
}

TEST(Parse, ParenthesesKeepGrouping) {
  const auto s = parse_spec("A = atom * (atom + eps);");
  EXPECT_EQ(s.body("A"), Expr::prod({Expr::atom(), Expr::sum({Expr::atom(), Expr::eps()})}));
}

TEST(Parse, SyntaxErrorHasPosition) {
  try {
    parse_spec("A = atom;\nB = atom +;");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 11u);
  }
}

TEST(Parse, Rejects) {
  EXPECT_THROW(parse_spec(""), ParseError);
  EXPECT_THROW(parse_spec("A = atom"), ParseError);
  EXPECT_THROW(parse_spec("A = atom; A = eps;"), ParseError);
  EXPECT_THROW(parse_spec("1A = atom;"), ParseError);
  EXPECT_THROW(parse_spec("A = seq atom;"), ParseError);
  EXPECT_THROW(parse_spec("atom = eps;"), ParseError);
  EXPECT_THROW(parse_spec("A = (atom;"), ParseError);
}

TEST(Print, Canonical) {
  const auto s = parse_spec("A = atom*(atom+eps) + seq(A)*mset2(A);  B=A;");
  EXPECT_EQ(to_string(s), "A = atom * (atom + eps) + seq(A) * mset2(A);\nB = A;\n");
}

TEST(Print, RoundTripProperty) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 2000; ++i) {
    const auto s = random_spec(rng);
    const auto text = to_string(s);
    const auto back = parse_spec(text);
    ASSERT_EQ(back, s) << text;
    ASSERT_EQ(to_string(back), text);
  }
}

TEST(Validate, BinaryTrees) {
  const auto r = validate_spec(parse_spec("B = atom + atom*B*B;"));
  EXPECT_TRUE(r.accepted());
  EXPECT_EQ(r.minsize_of("B"), 1u);
}

TEST(Validate, MinsizeRules) {
  const auto r = validate_spec(parse_spec(
      "A = atom*atom*atom + B*B; B = atom*atom; C = mset2(A); D = seq(A); E = eps; F = A*C + E;"));
  EXPECT_TRUE(r.accepted());
  EXPECT_EQ(r.minsize_of("A"), 3u);
  EXPECT_EQ(r.minsize_of("B"), 2u);
  EXPECT_EQ(r.minsize_of("C"), 6u);
  EXPECT_EQ(r.minsize_of("D"), 0u);
  EXPECT_EQ(r.minsize_of("E"), 0u);
  EXPECT_EQ(r.minsize_of("F"), 0u);
}

TEST(Validate, NonPointed) {
  const auto r = validate_spec(parse_spec("A = A;"));
  EXPECT_FALSE(r.accepted());
  EXPECT_TRUE(has_issue(r, IssueKind::NonPointed, "A"));
  EXPECT_EQ(r.minsize_of("A"), kInfiniteSize);

  const auto r2 = validate_spec(parse_spec("A = atom*B; B = atom*A;"));
  EXPECT_TRUE(has_issue(r2, IssueKind::NonPointed, "A"));
  EXPECT_TRUE(has_issue(r2, IssueKind::NonPointed, "B"));
}

TEST(Validate, SeqOfEmpty) {
  const auto r = validate_spec(parse_spec("S = seq(E); E = eps;"));
  EXPECT_FALSE(r.accepted());
  EXPECT_TRUE(has_issue(r, IssueKind::EpsilonCycle, "S"));
}

TEST(Validate, UnguardedCycle) {
  const auto r = validate_spec(parse_spec("A = atom + B; B = eps*A;"));
  EXPECT_FALSE(r.accepted());
  EXPECT_TRUE(has_issue(r, IssueKind::EpsilonCycle, "A"));
  EXPECT_TRUE(validate_spec(parse_spec("A = atom + atom*A;")).accepted());
}

TEST(Validate, UndefinedReference) {
  const auto r = validate_spec(parse_spec("A = atom + Missing;"));
  EXPECT_TRUE(has_issue(r, IssueKind::UndefinedRef, "A"));
}

TEST(Validate, MinsizeMonotoneUnderUnion) {
  // Replacing a subexpression e by e + x never increases any minimal size.
  std::mt19937_64 rng(7);
  const std::vector<std::string> names = {"A", "B_1", "tree"};
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    auto s = random_spec(rng);
    const auto before = validate_spec(s);
    CombSpec widened;
    for (const auto& d : s.definitions()) {
      Expr body = d.body;
      if (rng() % 2) body = Expr::sum({body, random_expr(rng, names, 2)});
      widened.define(d.name, body);
    }
    const auto after = validate_spec(widened);
    for (const auto& [name, m] : before.minsize) {
      EXPECT_LE(after.minsize_of(name), m) << to_string(s) << " vs " << to_string(widened);
      ++checked;
    }
  }
  EXPECT_GT(checked, 3000);
}

TEST(Grammar, RejectsInvalidSpec) {
  EXPECT_THROW(Grammar(parse_spec("A = A;")), DomainError);
  const Grammar g(parse_spec("V = atom + mset2(V); W = atom*V; X = atom + atom*X;"));
  EXPECT_TRUE(g.needs_levels(g.class_index("V")));
  EXPECT_FALSE(g.needs_levels(g.class_index("W")));
  EXPECT_FALSE(g.needs_levels(g.class_index("X")));
  EXPECT_TRUE(g.has_mset2());
}
