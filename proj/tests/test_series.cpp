#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "anasamp/series.hpp"
#include "anasamp/spec.hpp"

using namespace anasamp;

namespace {

using Series = std::vector<std::int64_t>;

// Reference enumeration: Kleene iteration of the whole truncated system,
// y <- Phi(y), starting from 0, working directly on the AST.
struct KleeneOracle {
  const CombSpec& spec;
  std::size_t n;
  std::map<std::string, Series> y;

  Series mul(const Series& a, const Series& b) const {
    Series c(n + 1, 0);
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; i + j <= n; ++j) c[i + j] += a[i] * b[j];
    return c;
  }

  Series eval(const Expr& e) const {
    Series s(n + 1, 0);
    switch (e.kind) {
      case ExprKind::Atom:
        if (n >= 1) s[1] = 1;
        return s;
      case ExprKind::Epsilon: s[0] = 1; return s;
      case ExprKind::Ref: return y.at(e.name);
      case ExprKind::Union:
        for (const auto& a : e.args) {
          const auto t = eval(a);
          for (std::size_t i = 0; i <= n; ++i) s[i] += t[i];
        }
        return s;
      case ExprKind::Product:
        s[0] = 1;
        for (const auto& a : e.args) s = mul(s, eval(a));
        return s;
      case ExprKind::Seq: {
        // 1 + b + b^2 + ... ; b has no constant term.
        const auto b = eval(e.args[0]);
        Series power(n + 1, 0);
        power[0] = 1;
        for (std::size_t k = 0; k <= n; ++k) {
          for (std::size_t i = 0; i <= n; ++i) s[i] += power[i];
          power = mul(power, b);
        }
        return s;
      }
      case ExprKind::MSet2: {
        const auto b = eval(e.args[0]);
        const auto sq = mul(b, b);
        for (std::size_t i = 0; i <= n; ++i) s[i] = (sq[i] + (i % 2 == 0 ? b[i / 2] : 0)) / 2;
        return s;
      }
    }
    return s;
  }

  Series run(const std::string& cls) {
    for (const auto& d : spec.definitions()) y[d.name] = Series(n + 1, 0);
    // Each round fixes at least one more coefficient of every class.
    for (std::size_t round = 0; round < 4 * (n + 2); ++round) {
      std::map<std::string, Series> next;
      for (const auto& d : spec.definitions()) next[d.name] = eval(d.body);
      y = std::move(next);
    }
    return y.at(cls);
  }
};

std::vector<std::int64_t> library(const std::string& text, const std::string& cls, std::size_t n) {
  const auto c = series_coefficients(parse_spec(text), cls, n);
  std::vector<std::int64_t> out;
  for (const auto& x : c) out.push_back(x.convert_to<std::int64_t>());
  return out;
}

}  // namespace

TEST(Series, BinaryTreesAreCatalan) {
  EXPECT_EQ(library("B = atom + atom*B*B;", "B", 5), (Series{0, 1, 0, 1, 0, 2}));
  EXPECT_EQ(library("B = atom + atom*B*B;", "B", 11), (Series{0, 1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42}));
}

TEST(Series, OtterTrees) {
  EXPECT_EQ(library("V = atom + mset2(V);", "V", 8), (Series{0, 1, 1, 1, 2, 3, 6, 11, 23}));
}

TEST(Series, Epsilon) { EXPECT_EQ(library("E = eps;", "E", 3), (Series{1, 0, 0, 0})); }

TEST(Series, MotzkinAndPlaneTrees) {
  EXPECT_EQ(library("M = atom*(eps + M + M*M);", "M", 7), (Series{0, 1, 1, 2, 4, 9, 21, 51}));
  EXPECT_EQ(library("T = atom*seq(T);", "T", 6), (Series{0, 1, 1, 2, 5, 14, 42}));
}

TEST(Series, MatchesKleeneIteration) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"B = atom + atom*B*B;", "B"},
      {"V = atom + mset2(V);", "V"},
      {"A = B + C; B = atom; C = atom*atom;", "A"},
      {"T = atom*seq(T);", "T"},
      {"S = seq(atom + atom*atom);", "S"},
      {"P = atom + mset2(P) + atom*seq(Q); Q = atom*atom + mset2(P*Q);", "P"},
      {"P = atom + mset2(P) + atom*seq(Q); Q = atom*atom + mset2(P*Q);", "Q"},
      {"F = eps + atom*F*F + mset2(atom*F);", "F"},
      {"X = mset2(Y) + atom; Y = X*X + atom*seq(Y);", "Y"},
  };
  const std::size_t n = 14;
  for (const auto& [text, cls] : cases) {
    const auto spec = parse_spec(text);
    KleeneOracle oracle{spec, n, {}};
    EXPECT_EQ(library(text, cls, n), oracle.run(cls)) << text;
  }
}

TEST(Series, BigCoefficients) {
  // C(100) for binary trees by nodes of size 2*50+1: the 50th Catalan number.
  const auto c = series_coefficients(parse_spec("B = atom + atom*B*B;"), "B", 101);
  EXPECT_EQ(c[101].str(), "1978261657756160653623774456");
}

TEST(Series, OrderLimit) {
  EXPECT_THROW(series_coefficients(parse_spec("E = eps;"), "E", kMaxSeriesOrder + 1), DomainError);
}

TEST(Series, Evaluation) {
  const std::vector<BigInt> c = {1, 2, 3};
  EXPECT_DOUBLE_EQ(evaluate_series(c, 0.5), 1 + 1 + 0.75);
}
