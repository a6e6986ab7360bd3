#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "anasamp/errors.hpp"
#include "anasamp/oracle.hpp"
#include "anasamp/spec.hpp"

namespace anasamp {

/// Simply generated trees Y = Z * Phi(Y) with Phi(x) = sum of x^w over the
/// multiset of allowed degrees.
class SimpleTreeFamily {
 public:
  explicit SimpleTreeFamily(std::vector<unsigned> omega) : omega_(std::move(omega)) {
    std::sort(omega_.begin(), omega_.end());
  }

  const std::vector<unsigned>& omega() const noexcept { return omega_; }

  bool pointed() const { return !omega_.empty() && omega_.front() == 0; }
  /// No degree >= 2: y/Phi(y) has no interior maximum.
  bool degenerate() const { return omega_.empty() || omega_.back() < 2; }

  double phi(double y) const {
    double s = 0.0;
    for (auto w : omega_) s += std::pow(y, static_cast<double>(w));
    return s;
  }

  double phi_prime(double y) const {
    double s = 0.0;
    for (auto w : omega_)
      if (w > 0) s += static_cast<double>(w) * std::pow(y, static_cast<double>(w - 1));
    return s;
  }

  /// The family as a specification: Y = atom * (eps + Y + Y*Y + ...).
  CombSpec to_spec(std::string name = "Y") const {
    std::vector<Expr> terms;
    for (auto w : omega_) {
      if (w == 0) {
        terms.push_back(Expr::eps());
      } else if (w == 1) {
        terms.push_back(Expr::ref(name));
      } else {
        terms.push_back(Expr::prod(std::vector<Expr>(w, Expr::ref(name))));
      }
    }
    Expr choice = terms.size() == 1 ? std::move(terms.front()) : Expr::sum(std::move(terms));
    CombSpec spec;
    spec.define(name, Expr::prod({Expr::atom(), std::move(choice)}));
    return spec;
  }

 private:
  std::vector<unsigned> omega_;
};

struct TuneResult {
  double y_star = 0.0;
  double z_star = 0.0;
  bool converged = false;
  std::uint64_t function_evals = 0;  // evaluations of Phi and Phi'
  std::uint64_t oracle_calls = 0;    // generating-function evaluations
};

/// Rightmost point of the validity region y >= z Phi(y): maximises
/// y / Phi(y) on (0, inf) with Brent's method. The bracket starts at
/// [1e-9, 1] and doubles its right end until the slope of y/Phi(y), whose
/// sign is that of Phi - y Phi', turns negative. No generating-function
/// value is computed.
inline TuneResult tune_simply_generated(const SimpleTreeFamily& family, double tol = 1e-12) {
  if (!family.pointed()) throw DomainError("degree multiset must contain 0");
  if (family.degenerate())
    throw DomainError("degenerate family: degrees within {0,1} give no interior maximum of y/Phi(y)");
  TuneResult r;
  auto slope_sign = [&](double y) {
    r.function_evals += 2;
    return family.phi(y) - y * family.phi_prime(y);
  };
  const double lo = 1e-9;
  double hi = 1.0;
  for (int i = 0; slope_sign(hi) > 0.0; ++i) {
    if (i == 64) throw DomainError("could not bracket the maximum of y/Phi(y)");
    hi *= 2.0;
  }

  auto objective = [&](double y) {
    ++r.function_evals;
    return -y / family.phi(y);
  };
  // Brent's method cannot locate an extremum to better than ~sqrt(eps).
  const int bits = std::clamp(static_cast<int>(std::ceil(-std::log2(tol))), 8,
                              std::numeric_limits<double>::digits / 2);
  const std::uintmax_t max_iter = 500;
  std::uintmax_t iters = max_iter;
  const double y = boost::math::tools::brent_find_minima(objective, lo, hi, bits, iters).first;
  r.converged = iters < max_iter;

  // Polish: y/Phi(y) is flat at its maximum, so Brent stops about sqrt(eps)
  // away. The sign change of Phi - y Phi' around y pins it down exactly.
  double a = y, b = y;
  const double step0 = y * std::ldexp(1.0, -bits);
  for (double step = step0; slope_sign(a) <= 0.0 && a > lo; step *= 2.0) a = std::max(lo, y - step);
  for (double step = step0; slope_sign(b) >= 0.0 && b < hi; step *= 2.0) b = std::min(hi, y + step);
  if (slope_sign(a) > 0.0 && slope_sign(b) < 0.0) {
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const double s = slope_sign(mid);
      if (s == 0.0) {
        a = b = mid;
        break;
      }
      (s > 0.0 ? a : b) = mid;
    }
    r.y_star = 0.5 * (a + b);
  } else {
    r.y_star = y;
  }
  r.z_star = r.y_star / family.phi(r.y_star);
  ++r.function_evals;
  return r;
}

struct BisectionResult {
  double rho = 0.0;
  double lo = 0.0;  // largest z seen converging
  double hi = 0.0;  // smallest z seen diverging
  std::uint64_t oracle_calls = 0;
};

/// Locates the radius of convergence by bisecting on whether the fixed-point
/// oracle converges (inside) or diverges (outside). Costs O(log(1/tol))
/// oracle calls.
inline BisectionResult find_singularity_bisection(const Grammar& g, std::size_t cls, double z_hi, double tol,
                                                  double oracle_tol = 1e-12) {
  if (!(z_hi > 0.0 && z_hi < 1.0)) throw DomainError("upper bracket must lie in (0,1)");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  BisectionResult r;
  auto converges = [&](double z) {
    ++r.oracle_calls;
    return gf_value(g, cls, z, oracle_tol).converged;
  };
  if (!converges(0.0)) throw DomainError("oracle diverges at z = 0");
  if (converges(z_hi))
    throw DomainError("oracle converges at the upper bracket " + std::to_string(z_hi) + ": no divergence to bracket");
  double lo = 0.0, hi = z_hi;
  while (hi - lo >= tol) {
    const double mid = 0.5 * (lo + hi);
    if (converges(mid)) lo = mid; else hi = mid;
  }
  r.lo = lo;
  r.hi = hi;
  r.rho = 0.5 * (lo + hi);
  return r;
}

inline BisectionResult find_singularity_bisection(const CombSpec& spec, std::string_view cls, double z_hi,
                                                  double tol, double oracle_tol = 1e-12) {
  Grammar g(spec);
  return find_singularity_bisection(g, g.class_index(cls), z_hi, tol, oracle_tol);
}

}  // namespace anasamp
