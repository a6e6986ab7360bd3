#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "anasamp/errors.hpp"
#include "anasamp/spec.hpp"

namespace anasamp {

using BigInt = boost::multiprecision::cpp_int;

inline constexpr std::size_t kMaxSeriesOrder = 10000;

/// Exact counting sequence c[0..order] of a class: c[n] is the number of
/// objects of size n.
///
/// Coefficients are fixed one order at a time. For order n the map
/// y -> Phi(z, y) is applied to the n-th coefficients of every node until
/// it stops changing; all lower orders are already final. Products with
/// size-0 factors are the only way an order-n coefficient can feed another
/// one, and the absence of unguarded cycles bounds the number of rounds by
/// the number of classes.
inline std::vector<BigInt> series_coefficients(const Grammar& g, std::size_t cls, std::size_t order) {
  if (order > kMaxSeriesOrder)
    throw DomainError("series order " + std::to_string(order) + " exceeds the practical bound " +
                      std::to_string(kMaxSeriesOrder));
  const auto& nodes = g.nodes();
  const std::size_t len = order + 1;
  std::vector<std::vector<BigInt>> coef(nodes.size(), std::vector<BigInt>(len));
  // Prefix products for n-ary products: partial[i][j] holds factors 0..j+1.
  std::vector<std::vector<std::vector<BigInt>>> partial(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == ExprKind::Product)
      partial[i].assign(nodes[i].kids.size() - 1, std::vector<BigInt>(len));

  auto convolve_at = [](const std::vector<BigInt>& a, const std::vector<BigInt>& b, std::size_t n) {
    BigInt s = 0;
    for (std::size_t i = 0; i <= n; ++i)
      if (!a[i].is_zero() && !b[n - i].is_zero()) s += a[i] * b[n - i];
    return s;
  };

  for (std::size_t n = 0; n < len; ++n) {
    for (std::size_t round = 0;; ++round) {
      if (round > g.class_count() + 1)
        throw DomainError("series iteration did not stabilise");  // unreachable for valid specs
      bool changed = false;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& node = nodes[i];
        BigInt v = 0;
        switch (node.kind) {
          case ExprKind::Atom: v = (n == 1) ? 1 : 0; break;
          case ExprKind::Epsilon: v = (n == 0) ? 1 : 0; break;
          case ExprKind::Ref: v = coef[g.root(node.ref)][n]; break;
          case ExprKind::Union:
            for (auto k : node.kids) v += coef[k][n];
            break;
          case ExprKind::Product: {
            const std::vector<BigInt>* left = &coef[node.kids[0]];
            for (std::size_t j = 1; j < node.kids.size(); ++j) {
              partial[i][j - 1][n] = convolve_at(*left, coef[node.kids[j]], n);
              left = &partial[i][j - 1];
            }
            v = (*left)[n];
            break;
          }
          case ExprKind::Seq: {
            // S = 1 + E*S with e[0] = 0.
            const auto& e = coef[node.kids[0]];
            v = (n == 0) ? 1 : 0;
            for (std::size_t k = 1; k <= n; ++k)
              if (!e[k].is_zero()) v += e[k] * coef[i][n - k];
            break;
          }
          case ExprKind::MSet2: {
            // Unordered pairs: (B(z)^2 + B(z^2)) / 2.
            const auto& b = coef[node.kids[0]];
            BigInt twice = convolve_at(b, b, n);
            if (n % 2 == 0) twice += b[n / 2];
            v = twice / 2;
            break;
          }
        }
        if (v != coef[i][n]) {
          coef[i][n] = std::move(v);
          changed = true;
        }
      }
      if (!changed) break;
    }
  }
  return coef[g.root(cls)];
}

inline std::vector<BigInt> series_coefficients(const CombSpec& spec, std::string_view cls, std::size_t order) {
  Grammar g(spec);
  return series_coefficients(g, g.class_index(cls), order);
}

/// Sum of c[n] z^n over the truncated sequence, in double precision.
inline double evaluate_series(const std::vector<BigInt>& c, double z) {
  double acc = 0.0;
  for (std::size_t n = c.size(); n-- > 0;) acc = acc * z + c[n].convert_to<double>();
  return acc;
}

}  // namespace anasamp
