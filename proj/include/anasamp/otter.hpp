#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "anasamp/errors.hpp"
#include "anasamp/oracle.hpp"
#include "anasamp/random.hpp"
#include "anasamp/sampler.hpp"
#include "anasamp/spec.hpp"
#include "anasamp/tuning.hpp"

namespace anasamp {

/// Otter trees (non-plane binary trees counted by leaves): V = Z + MSet2(V).
inline CombSpec otter_spec() { return parse_spec("V = atom + mset2(V);"); }

/// Parameters of the Otter sampler: exact level values v[0..i0], and the
/// tail v[i] = K z^(2^i) for i > i0.
struct OtterParams {
  double z = 0.0;
  unsigned i0 = 0;
  double K = 1.0;
  std::vector<double> v;

  double value(unsigned level) const { return level <= i0 ? v.at(level) : K * level_argument(z, level); }

  Coordinates coordinates() const { return Coordinates{z, {{"V", v}}, {{"V", K}}}; }
};

/// Threshold making z^(2^(i0+1)) < 1e-12, and at least 8.
inline unsigned default_i0(double z) {
  if (!(z > 0.0 && z < 1.0)) return 8;
  const double needed = std::log2(std::log(1e-12) / std::log(z));
  return std::max(8u, static_cast<unsigned>(std::max(0.0, std::ceil(needed))));
}

/// Tail inequality K >= 1 + K z^(2^i) (K+1)/2 at the first tail level.
inline bool tail_holds(double z, unsigned i0, double K) {
  const double zl = level_argument(z, i0 + 1);
  return K >= 1.0 + K * zl * (K + 1.0) / 2.0;
}

/// Smallest tail constant: the lower root of c K^2 + (c-1) K + 1 = 0 with
/// c = z^(2^(i0+1)) / 2, computed without cancellation as
/// 2 / ((1-c) + sqrt((1-c)^2 - 4c)), then nudged up until the inequality
/// holds in floating point.
inline double solve_K(double z, unsigned i0) {
  if (!(z >= 0.0 && z < 1.0)) throw DomainError("z must lie in [0,1)");
  const double c = level_argument(z, i0 + 1) / 2.0;
  const double disc = (1.0 - c) * (1.0 - c) - 4.0 * c;
  if (disc < 0.0)
    throw DomainError("threshold i0 = " + std::to_string(i0) + " is too low for z = " + std::to_string(z) +
                      ": no tail constant exists");
  double K = 2.0 / ((1.0 - c) + std::sqrt(disc));
  K = std::max(K, 1.0 + 0x1.0p-40);
  for (int i = 0; !tail_holds(z, i0, K); ++i) {
    if (i == 1000) throw DomainError("could not certify the tail constant");
    K *= 1.0 + 0x1.0p-40;
  }
  return K;
}

/// Exact values v[i] = 1 - sqrt(1 - 2 z^(2^i) - v[i+1]) for i = i0 down to
/// 0, starting from v[i0+1] = K z^(2^(i0+1)). Each value is then raised by
/// ulps, if needed, until v[i] >= phi holds in floating point.
inline std::vector<double> otter_backsolve(double z, unsigned i0, double K) {
  if (!(z >= 0.0 && z < 1.0)) throw DomainError("z must lie in [0,1)");
  const Grammar g(otter_spec());
  std::vector<double> v(i0 + 2);
  v[i0 + 1] = K * level_argument(z, i0 + 1);
  for (unsigned i = i0 + 1; i-- > 0;) {
    const double zi = level_argument(z, i);
    const double r = 2.0 * zi + v[i + 1];
    const double radicand = 1.0 - r;
    if (radicand < 0.0)
      throw DomainError("negative radicand at level " + std::to_string(i) + ": z = " + std::to_string(z) +
                        " lies beyond the singularity of this truncation");
    double vi = r / (1.0 + std::sqrt(radicand));  // 1 - sqrt(1 - r) without cancellation
    // phi at this level, evaluated the way the sampler evaluates it.
    auto phi = [&](double x) {
      auto value = [&](std::uint32_t, unsigned l) { return l == i ? x : v[i + 1]; };
      return eval_node(g, g.root(0), z, i, value);
    };
    for (int k = 0; phi(vi) > vi; ++k) {
      if (k == 64) throw DomainError("could not certify level " + std::to_string(i));
      vi = std::nextafter(vi, 2.0);
    }
    v[i] = vi;
  }
  v.pop_back();
  return v;
}

/// Parameters at z with the default threshold and the smallest tail constant
/// unless overridden (0 means "choose").
inline OtterParams make_otter_params(double z, unsigned i0 = 0, double K = 0.0) {
  OtterParams p;
  p.z = z;
  p.i0 = i0 ? i0 : default_i0(z);
  p.K = K > 0.0 ? K : solve_K(z, p.i0);
  if (!(p.K > 1.0)) throw DomainError("tail constant must exceed 1");
  if (!tail_holds(z, p.i0, p.K)) throw DomainError("tail constant violates the tail inequality");
  p.v = otter_backsolve(z, p.i0, p.K);
  if (p.v.front() > 1.0) throw DomainError("level value above 1");
  return p;
}

/// Largest z for which the truncated level system can be back-solved, i.e.
/// the singularity of the sampler at threshold i0. A coarse estimate comes
/// from oracle bisection; the backsolve's own feasibility then refines it.
inline double otter_singular_z(unsigned i0 = 0, double tol = 1e-15) {
  const auto coarse = find_singularity_bisection(otter_spec(), "V", 0.5, 1e-6);
  auto feasible = [&](double z) {
    try {
      const unsigned level = i0 ? i0 : default_i0(z);
      otter_backsolve(z, level, solve_K(z, level));
      return true;
    } catch (const DomainError&) {
      return false;
    }
  };
  double lo = coarse.lo * (1.0 - 1e-4);
  double hi = std::min(0.5, coarse.hi * (1.0 + 1e-4));
  while (!feasible(lo)) lo *= 0.99;
  while (feasible(hi)) hi = std::min(0.999, hi * 1.01);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (feasible(mid)) lo = mid; else hi = mid;
  }
  return lo;
}

/// Sampler over OtterParams; levels <= i0 never fail (up to rounding), only
/// tail levels can.
inline Sampler make_otter_sampler(const OtterParams& params) {
  return Sampler(otter_spec(), "V", params.coordinates());
}

template <RandomSource R>
Outcome sample_otter(const OtterParams& params, R& rng, std::uint64_t max_size) {
  return make_otter_sampler(params).sample_once(rng, max_size);
}

}  // namespace anasamp
