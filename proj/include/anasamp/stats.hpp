#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "anasamp/errors.hpp"

namespace anasamp {

struct ChiSquareResult {
  double statistic = 0.0;
  std::uint64_t dof = 0;
  double critical_value = 0.0;
  bool pass = true;
  std::uint64_t distinct_seen = 0;
};

/// Upper quantile of the chi-square law: P(X > x) = alpha.
inline double chi_square_critical(std::uint64_t dof, double alpha) {
  if (dof == 0) return 0.0;
  boost::math::chi_squared_distribution<double> law(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(law, alpha));
}

/// Goodness of fit of observed object counts to the uniform law over
/// `universe` objects. Objects never observed contribute their full
/// expectation; seeing more distinct objects than exist fails outright.
inline ChiSquareResult chi_square_uniform(const std::map<std::string, std::uint64_t>& counts,
                                          std::uint64_t universe, double alpha = 0.001) {
  if (universe == 0) throw DomainError("empty universe");
  ChiSquareResult r;
  r.dof = universe - 1;
  r.critical_value = chi_square_critical(r.dof, alpha);
  r.distinct_seen = counts.size();
  std::uint64_t total = 0;
  for (const auto& [_, c] : counts) total += c;
  if (r.distinct_seen > universe) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.pass = false;
    return r;
  }
  if (total == 0 || r.dof == 0) return r;
  const double expected = static_cast<double>(total) / static_cast<double>(universe);
  for (const auto& [_, c] : counts) {
    const double d = static_cast<double>(c) - expected;
    r.statistic += d * d / expected;
  }
  r.statistic += static_cast<double>(universe - r.distinct_seen) * expected;
  r.pass = r.statistic <= r.critical_value;
  return r;
}

/// Standard deviation of a binomial proportion.
inline double binomial_sigma(double p, std::uint64_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

/// Sample Pearson correlation; 0 when either series is constant.
inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("series lengths differ");
  const double n = static_cast<double>(x.size());
  if (x.empty()) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace anasamp
