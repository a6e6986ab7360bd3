#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anasamp/errors.hpp"
#include "anasamp/spec.hpp"

namespace anasamp {

/// z^(2^level), by repeated squaring. Every module uses this routine so that
/// level arguments agree bit for bit.
inline double level_argument(double z, unsigned level) {
  for (unsigned i = 0; i < level; ++i) z *= z;
  return z;
}

/// Value of an expression node at squaring level `level`. `cls_value(c, l)`
/// supplies class values; an mset2 node reads its argument one level deeper.
/// Throws DomainError when a sequence argument is >= 1.
template <typename ClassValue>
double eval_node(const Grammar& g, std::uint32_t node, double z, unsigned level, const ClassValue& cls_value) {
  const auto& n = g.node(node);
  switch (n.kind) {
    case ExprKind::Atom: return level_argument(z, level);
    case ExprKind::Epsilon: return 1.0;
    case ExprKind::Ref: return cls_value(n.ref, level);
    case ExprKind::Union: {
      double s = 0.0;
      for (auto k : n.kids) s += eval_node(g, k, z, level, cls_value);
      return s;
    }
    case ExprKind::Product: {
      double p = 1.0;
      for (auto k : n.kids) p *= eval_node(g, k, z, level, cls_value);
      return p;
    }
    case ExprKind::Seq: {
      const double b = eval_node(g, n.kids[0], z, level, cls_value);
      if (!(b < 1.0)) throw DomainError("sequence argument value " + std::to_string(b) + " is not below 1");
      return 1.0 / (1.0 - b);
    }
    case ExprKind::MSet2: {
      const double b = eval_node(g, n.kids[0], z, level, cls_value);
      const double bb = eval_node(g, n.kids[0], z, level + 1, cls_value);
      return 0.5 * (b * b + bb);
    }
  }
  return 0.0;
}

/// phi for one class: the right-hand side of its defining equation at
/// argument `z_arg`, with `values` for the other classes and `squared` for
/// their values at z_arg^2 (needed under mset2 only).
inline double eval_phi(const Grammar& g, std::size_t cls, double z_arg, const std::map<std::string, double>& values,
                       const std::map<std::string, double>& squared = {}) {
  if (!(z_arg >= 0.0 && z_arg < 1.0)) throw DomainError("argument z must lie in [0,1)");
  auto lookup = [&](std::uint32_t c, unsigned level) -> double {
    const auto& table = level == 0 ? values : squared;
    if (level > 1) throw DomainError("nested mset2 needs values beyond z^2");
    auto it = table.find(g.class_name(c));
    if (it == table.end())
      throw DomainError("missing value for class '" + g.class_name(c) + "'" + (level ? " at z^2" : ""));
    return it->second;
  };
  return eval_node(g, g.root(cls), z_arg, 0, lookup);
}

inline double eval_phi(const CombSpec& spec, std::string_view cls, double z_arg,
                       const std::map<std::string, double>& values,
                       const std::map<std::string, double>& squared = {}) {
  Grammar g(spec);
  return eval_phi(g, g.class_index(cls), z_arg, values, squared);
}

// ---------------------------------------------------------------------------
// Coordinates

/// Control parameter of an analytic sampler: z and, per class, candidate
/// values v[i] for the class generating function at z^(2^i). Classes that
/// occur under mset2 carry a tail constant K with v[i] = K z^(2^i) beyond
/// the explicit levels.
struct Coordinates {
  double z = 0.0;
  std::map<std::string, std::vector<double>> levels;
  std::map<std::string, double> tail_k;
};

/// Coordinates bound to class indices of a grammar.
class ResolvedCoordinates {
 public:
  ResolvedCoordinates(const Grammar& g, const Coordinates& c) : z_(c.z), levels_(g.class_count()), tail_(g.class_count()) {
    for (const auto& [name, v] : c.levels) levels_[g.class_index(name)] = v;
    for (const auto& [name, k] : c.tail_k) tail_[g.class_index(name)] = k;
  }

  double z() const noexcept { return z_; }
  std::size_t explicit_levels(std::size_t cls) const { return levels_[cls].size(); }
  std::optional<double> tail(std::size_t cls) const { return tail_[cls]; }

  /// Throws DomainError when no value is available.
  double value(std::size_t cls, unsigned level) const {
    const auto& v = levels_[cls];
    if (level < v.size()) return v[level];
    if (tail_[cls] && !v.empty()) return *tail_[cls] * level_argument(z_, level);
    throw DomainError("no value for class at level " + std::to_string(level));
  }

 private:
  double z_;
  std::vector<std::vector<double>> levels_;
  std::vector<std::optional<double>> tail_;
};

struct Violation {
  std::string class_name;
  unsigned level;
  double slack;  // NaN when the value could not be computed
  std::string message;
};

struct ValidityReport {
  /// slack[cls][i] = v[i] - phi at level i; for classes with a tail the last
  /// entry is the tail level i0+1.
  std::map<std::string, std::vector<double>> slack;
  std::vector<Violation> violations;

  bool valid() const noexcept { return violations.empty(); }
};

/// Slack of one class at one level under resolved coordinates.
inline double level_slack(const Grammar& g, const ResolvedCoordinates& rc, std::size_t cls, unsigned level) {
  auto value = [&rc](std::uint32_t c, unsigned l) { return rc.value(c, l); };
  const double phi = eval_node(g, g.root(cls), rc.z(), level, value);
  return rc.value(cls, level) - phi;
}

/// Checks v >= phi(z^(2^i), v) at every explicit level, and once at the
/// first tail level: for z < 1 the tail right-hand side only shrinks as i
/// grows. The comparison is strict, in default rounding.
inline ValidityReport check_validity(const Grammar& g, const Coordinates& coords) {
  ValidityReport report;
  auto violate = [&report](const std::string& cls, unsigned level, double slack, std::string msg) {
    report.violations.push_back({cls, level, slack, std::move(msg)});
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();

  if (!(coords.z >= 0.0 && coords.z < 1.0)) {
    violate("", 0, nan, "z must lie in [0,1)");
    return report;
  }
  for (const auto& [name, _] : coords.levels)
    if (!g.spec().index_of(name)) violate(name, 0, nan, "coordinates name unknown class '" + name + "'");
  for (const auto& [name, _] : coords.tail_k)
    if (!g.spec().index_of(name)) violate(name, 0, nan, "tail constant names unknown class '" + name + "'");
  if (!report.valid()) return report;

  ResolvedCoordinates rc(g, coords);
  for (std::size_t c = 0; c < g.class_count(); ++c) {
    const auto& name = g.class_name(c);
    const std::size_t explicit_levels = rc.explicit_levels(c);
    if (explicit_levels == 0) {
      violate(name, 0, nan, "missing value for class '" + name + "'");
      continue;
    }
    if (!g.needs_levels(c)) {
      if (explicit_levels > 1) violate(name, 1, nan, "class '" + name + "' takes a single value (not under mset2)");
      if (rc.tail(c)) violate(name, 1, nan, "class '" + name + "' takes no tail constant (not under mset2)");
    } else if (!rc.tail(c)) {
      violate(name, static_cast<unsigned>(explicit_levels), nan, "class '" + name + "' needs a tail constant");
    } else if (!(*rc.tail(c) > 1.0)) {
      violate(name, static_cast<unsigned>(explicit_levels), nan, "tail constant of '" + name + "' must exceed 1");
    }
  }
  if (!report.valid()) return report;

  for (std::size_t c = 0; c < g.class_count(); ++c) {
    const auto& name = g.class_name(c);
    const unsigned last = static_cast<unsigned>(rc.explicit_levels(c)) + (g.needs_levels(c) ? 1u : 0u);
    auto& slacks = report.slack[name];
    for (unsigned level = 0; level < last; ++level) {
      double s = nan;
      try {
        s = level_slack(g, rc, c, level);
      } catch (const DomainError& e) {
        violate(name, level, nan, e.what());
        slacks.push_back(nan);
        continue;
      }
      slacks.push_back(s);
      if (!(s >= 0.0))
        violate(name, level, s, "value of '" + name + "' at level " + std::to_string(level) +
                                    " is below phi (slack " + std::to_string(s) + ")");
    }
  }
  return report;
}

inline ValidityReport check_validity(const CombSpec& spec, const Coordinates& coords) {
  return check_validity(Grammar(spec), coords);
}

/// Moves a user-supplied value up by a few ulps so that values printed from
/// an exact generating function evaluation still pass the strict check.
inline double nudge_up(double v) {
  for (int i = 0; i < 4; ++i) v = std::nextafter(v, std::numeric_limits<double>::infinity());
  return v;
}

// ---------------------------------------------------------------------------
// Generating function values

struct GfResult {
  bool converged = false;
  double value = 0.0;
  std::uint64_t iterations = 0;
};

inline constexpr double kDivergenceCeiling = 1e6;
inline constexpr std::uint64_t kIterationCap = 100000;

namespace detail {

/// Fixed-point iteration of all class values at one level, starting from 0.
/// `values` holds one vector per level; levels past the end read `base`.
inline bool iterate_level(const Grammar& g, double z, unsigned level, std::vector<std::vector<double>>& values,
                          const std::vector<double>& base, double tol, std::uint64_t& iterations) {
  const std::size_t n = g.class_count();
  auto lookup = [&](std::uint32_t c, unsigned l) { return l < values.size() ? values[l][c] : base[c]; };
  auto& y = values[level];
  y.assign(n, 0.0);
  std::vector<double> next(n);
  for (iterations = 1; iterations <= kIterationCap; ++iterations) {
    double delta = 0.0;
    try {
      for (std::size_t c = 0; c < n; ++c) next[c] = eval_node(g, g.root(c), z, level, lookup);
    } catch (const DomainError&) {
      return false;
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (!std::isfinite(next[c]) || next[c] > kDivergenceCeiling) return false;
      delta = std::max(delta, std::abs(next[c] - y[c]));
    }
    y = next;
    if (delta < tol) return true;
  }
  return false;
}

}  // namespace detail

/// Values of every class at z by monotone fixed-point iteration from 0.
/// Grammars with mset2 are evaluated on the truncated level system: the
/// deepest level reads the values at z = 0 for its squared arguments.
inline std::vector<GfResult> gf_values(const Grammar& g, double z, double tol) {
  if (!(z >= 0.0 && z < 1.0)) throw DomainError("z must lie in [0,1)");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const std::size_t n = g.class_count();
  std::vector<GfResult> out(n);

  unsigned depth = 0;
  if (g.has_mset2()) {
    while (depth < 64 && level_argument(z, depth) > 1e-300) ++depth;
  }
  // Constant terms: phi(0, y, y) reaches its fixpoint after finitely many steps.
  std::vector<double> base(n, 0.0);
  if (g.has_mset2()) {
    std::vector<std::vector<double>> self(1, std::vector<double>(n, 0.0));
    std::uint64_t it = 0;
    auto lookup = [&](std::uint32_t c, unsigned) { return self[0][c]; };
    for (it = 0; it < n + 2; ++it) {
      std::vector<double> next(n);
      for (std::size_t c = 0; c < n; ++c) next[c] = eval_node(g, g.root(c), 0.0, 0, lookup);
      self[0] = next;
    }
    base = self[0];
  }

  std::vector<std::vector<double>> values(depth + 1);
  for (unsigned level = depth + 1; level-- > 0;) {
    std::uint64_t iterations = 0;
    const bool ok = detail::iterate_level(g, z, level, values, base, tol, iterations);
    if (!ok) {
      for (auto& r : out) r = GfResult{false, 0.0, iterations};
      return out;
    }
    if (level == 0)
      for (std::size_t c = 0; c < n; ++c) out[c] = GfResult{true, values[0][c], iterations};
  }
  return out;
}

/// Value of one class at z; Diverged beyond the radius of convergence.
inline GfResult gf_value(const Grammar& g, std::size_t cls, double z, double tol) {
  return gf_values(g, z, tol).at(cls);
}

inline GfResult gf_value(const CombSpec& spec, std::string_view cls, double z, double tol) {
  Grammar g(spec);
  return gf_value(g, g.class_index(cls), z, tol);
}

// ---------------------------------------------------------------------------
// Failure quantities

/// Probability that one attempt fails: 1 - A(z)/a.
inline double theoretical_failure(double gf_at_z, double a) {
  if (!(gf_at_z > 0.0)) throw DomainError("generating function value must be positive");
  if (a < gf_at_z) throw DomainError("value a is below A(z): coordinates are not valid");
  return 1.0 - gf_at_z / a;
}

/// Mean number of failed attempts before an accepted one: a/A(z) - 1.
inline double expected_failures(double gf_at_z, double a) {
  if (!(gf_at_z > 0.0)) throw DomainError("generating function value must be positive");
  if (a < gf_at_z) throw DomainError("value a is below A(z): coordinates are not valid");
  return a / gf_at_z - 1.0;
}

/// Tree function T(z) = z e^T(z) (Cayley trees), principal branch, for
/// 0 <= z <= 1/e. Newton iteration from T = 0; near the branch point the
/// start comes from the square-root expansion in p = sqrt(2(1 - e z)).
inline double cayley_T(double z, double tol = 1e-15) {
  const double inv_e = std::exp(-1.0);
  if (!(z >= 0.0)) throw DomainError("cayley_T needs z >= 0");
  if (z > inv_e) throw DomainError("cayley_T has no real value for z > 1/e");
  if (z == 0.0) return 0.0;

  const double p = std::sqrt(2.0 * std::max(0.0, 1.0 - std::exp(1.0) * z));
  const double expansion = 1.0 - p + p * p / 3.0 - 11.0 / 72.0 * p * p * p + 43.0 / 540.0 * p * p * p * p;
  if (p < 1e-3) return std::min(1.0, expansion);

  double t = p < 0.3 ? expansion : 0.0;
  for (int i = 0; i < 200; ++i) {
    const double ez = z * std::exp(t);
    const double step = (t - ez) / (1.0 - ez);
    t -= step;
    if (std::abs(step) < tol) break;
  }
  return std::clamp(t, 0.0, 1.0);
}

}  // namespace anasamp
