#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "anasamp/errors.hpp"
#include "anasamp/oracle.hpp"
#include "anasamp/random.hpp"
#include "anasamp/spec.hpp"
#include "anasamp/term_tree.hpp"

namespace anasamp {

/// The attempt was rejected to compensate for the approximation: the class
/// expansion at (`cls`, `level`) failed its test.
struct Failure {
  std::size_t cls = 0;
  unsigned level = 0;
};

/// The attempt was aborted because it exceeded the size budget.
struct Overflow {};

struct Accepted {
  TermTree tree;
  std::uint64_t size = 0;
};

using Outcome = std::variant<Failure, Overflow, Accepted>;

inline bool is_failure(const Outcome& o) { return std::holds_alternative<Failure>(o); }
inline bool is_overflow(const Outcome& o) { return std::holds_alternative<Overflow>(o); }
inline bool is_accepted(const Outcome& o) { return std::holds_alternative<Accepted>(o); }

/// Deepest squaring level the samplers will enter; an atom there would
/// already weigh 2^63.
inline constexpr unsigned kMaxLevel = 63;

/// Analytic sampler for one class of a specification under fixed valid
/// coordinates. Every class expansion at level i first survives a test of
/// probability phi(z^(2^i), v)/v[i]; the expression below it is then drawn
/// with the exact Boltzmann rules for its φ-values. An accepted object α is
/// returned with probability z^|α| / v[cls][0].
///
/// Immutable after construction; concurrent calls with distinct random
/// sources are safe.
class Sampler {
 public:
  Sampler(const CombSpec& spec, std::string_view cls, Coordinates coords)
      : g_(spec), cls_(g_.class_index(cls)), coords_(std::move(coords)) {
    const auto report = check_validity(g_, coords_);
    if (!report.valid()) {
      std::string msg = "coordinates are not analytically valid:";
      for (const auto& v : report.violations) msg += "\n  " + v.message;
      throw DomainError(msg);
    }
    build_tables();
  }

  const Grammar& grammar() const noexcept { return g_; }
  const Coordinates& coordinates() const noexcept { return coords_; }
  std::size_t class_index() const noexcept { return cls_; }

  /// v[cls][0], the normaliser of the output law.
  double root_value() const { return coords_.levels.at(g_.class_name(cls_)).front(); }

  /// Survival probability of a class expansion at a level.
  double success_probability(std::size_t cls, unsigned level) const { return levels_.at(level).success.at(cls); }

  template <RandomSource R>
  Outcome sample_once(R& rng, std::uint64_t max_size) const {
    struct Task {
      std::uint32_t node;  // grammar node, or class index when `expand`
      std::uint32_t level;
      std::uint32_t slot;  // child slot in the tree; kNoSlot for the root
      std::int32_t tag;
      bool expand;
    };
    constexpr std::uint32_t kNoSlot = ~std::uint32_t{0};

    TermTree tree(g_.class_names());
    std::uint64_t size = 0;
    std::vector<Task> stack;
    stack.push_back({static_cast<std::uint32_t>(cls_), 0, kNoSlot, -1, true});

    while (!stack.empty()) {
      Task t = stack.back();
      stack.pop_back();

      if (t.expand) {
        if (!draw_bernoulli(levels_[t.level].success[t.node], rng)) return Failure{t.node, t.level};
        const std::int32_t tag = t.tag >= 0 ? t.tag : static_cast<std::int32_t>(t.node);
        stack.push_back({g_.root(t.node), t.level, t.slot, tag, false});
        continue;
      }

      const GrammarNode& gn = g_.node(t.node);
      if (gn.kind == ExprKind::Ref) {
        stack.push_back({gn.ref, t.level, t.slot, t.tag, true});
        continue;
      }
      const auto& lv = levels_[t.level];
      const std::uint32_t id = tree.add(kind_of(gn.kind));
      if (t.tag >= 0) tree.node(id).cls = t.tag;
      if (t.slot != kNoSlot) tree.set_child(t.slot, id);

      switch (gn.kind) {
        case ExprKind::Atom:
          size += std::uint64_t{1} << t.level;
          if (size > max_size) return Overflow{};
          break;
        case ExprKind::Epsilon:
          break;
        case ExprKind::Union: {
          const auto& thresholds = lv.union_split[t.node];
          std::uint32_t j = static_cast<std::uint32_t>(gn.kids.size() - 1);
          while (j > 0 && !draw_bernoulli(thresholds[j], rng)) --j;
          tree.node(id).branch = j;
          const auto slot = tree.reserve_children(id, 1);
          stack.push_back({gn.kids[j], t.level, slot, -1, false});
          break;
        }
        case ExprKind::Product: {
          const auto n = static_cast<std::uint32_t>(gn.kids.size());
          const auto first = tree.reserve_children(id, n);
          for (std::uint32_t k = n; k-- > 0;) stack.push_back({gn.kids[k], t.level, first + k, -1, false});
          break;
        }
        case ExprKind::Seq: {
          const std::uint64_t k = draw_geometric(lv.value[gn.kids[0]], rng);
          // Every element weighs at least 2^level.
          if (k > ((max_size - size) >> t.level)) return Overflow{};
          const auto n = static_cast<std::uint32_t>(k);
          const auto first = tree.reserve_children(id, n);
          for (std::uint32_t c = n; c-- > 0;) stack.push_back({gn.kids[0], t.level, first + c, -1, false});
          break;
        }
        case ExprKind::MSet2: {
          if (draw_bernoulli(lv.pair_split[t.node], rng)) {
            const auto first = tree.reserve_children(id, 2);
            stack.push_back({gn.kids[0], t.level, first + 1, -1, false});
            stack.push_back({gn.kids[0], t.level, first, -1, false});
          } else {
            if (t.level + 1 >= kMaxLevel) return Overflow{};
            tree.node(id).duplicated = true;
            const auto slot = tree.reserve_children(id, 1);
            stack.push_back({gn.kids[0], t.level + 1, slot, -1, false});
          }
          break;
        }
        case ExprKind::Ref:
          break;
      }
    }
    if (g_.has_mset2()) canonicalize(tree);
    return Accepted{std::move(tree), size};
  }

 private:
  struct Level {
    std::vector<double> value;                      // per grammar node
    std::vector<double> success;                    // per class
    std::vector<std::vector<double>> union_split;   // per union node: w_j / (w_0 + ... + w_j)
    std::vector<double> pair_split;                 // per mset2 node: b^2 / (b^2 + b(z^2))
  };

  Grammar g_;
  std::size_t cls_;
  Coordinates coords_;
  std::vector<Level> levels_;

  static TermKind kind_of(ExprKind k) {
    switch (k) {
      case ExprKind::Atom: return TermKind::Atom;
      case ExprKind::Epsilon: return TermKind::Epsilon;
      case ExprKind::Union: return TermKind::Tagged;
      case ExprKind::Product: return TermKind::Tuple;
      case ExprKind::Seq: return TermKind::List;
      case ExprKind::MSet2: return TermKind::Pair;
      case ExprKind::Ref: break;
    }
    return TermKind::Epsilon;
  }

  void build_tables() {
    const ResolvedCoordinates rc(g_, coords_);
    const auto& nodes = g_.nodes();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    // Grammar nodes are laid out class by class, each block ending at its root.
    std::vector<std::size_t> owner(nodes.size());
    for (std::size_t c = 0, start = 0; c < g_.class_count(); ++c) {
      for (std::size_t i = start; i <= g_.root(c); ++i) owner[i] = c;
      start = g_.root(c) + 1;
    }
    auto cls_value = [&rc](std::uint32_t c, unsigned l) { return rc.value(c, l); };

    levels_.resize(kMaxLevel + 1);
    for (unsigned level = 0; level <= kMaxLevel; ++level) {
      Level& lv = levels_[level];
      lv.value.assign(nodes.size(), nan);
      lv.success.assign(g_.class_count(), nan);
      lv.union_split.assign(nodes.size(), {});
      lv.pair_split.assign(nodes.size(), nan);
      for (std::size_t c = 0; c < g_.class_count(); ++c) {
        if (level > 0 && !g_.needs_levels(c)) continue;
        const double v = rc.value(c, level);
        const double phi = eval_node(g_, g_.root(c), coords_.z, level, cls_value);
        if (v == 0.0) {
          lv.success[c] = 1.0;  // unreachable: every path into this level has probability 0
        } else {
          if (phi > v)
            throw DomainError("coordinates of '" + g_.class_name(c) + "' fail the tail inequality at level " +
                              std::to_string(level));
          lv.success[c] = phi / v;
        }
      }
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (level > 0 && !g_.needs_levels(owner[i])) continue;
        lv.value[i] = eval_node(g_, static_cast<std::uint32_t>(i), coords_.z, level, cls_value);
        const auto& n = nodes[i];
        if (n.kind == ExprKind::Union) {
          auto& split = lv.union_split[i];
          double prefix = 0.0;
          for (auto k : n.kids) {
            const double w = eval_node(g_, k, coords_.z, level, cls_value);
            prefix += w;
            split.push_back(prefix > 0.0 ? w / prefix : 0.0);
          }
        } else if (n.kind == ExprKind::MSet2) {
          const double b = eval_node(g_, n.kids[0], coords_.z, level, cls_value);
          const double bb = eval_node(g_, n.kids[0], coords_.z, level + 1, cls_value);
          const double pair = b * b;
          lv.pair_split[i] = pair + bb > 0.0 ? pair / (pair + bb) : 1.0;
        }
      }
    }
  }
};

/// One attempt from scratch; builds the sampler tables on every call.
template <RandomSource R>
Outcome sample_once(const CombSpec& spec, std::string_view cls, const Coordinates& coords, R& rng,
                    std::uint64_t max_size) {
  return Sampler(spec, cls, coords).sample_once(rng, max_size);
}

// ---------------------------------------------------------------------------
// Cayley trees

/// Analytic sampler for Cayley trees T = Z * Set(T) at (z, t) with
/// t >= z e^t: survive with probability z e^t / t, then draw Poisson(t)
/// children. Only the shape is produced (each node a pair (atom, list of
/// children)); labels are not drawn.
class CayleySampler {
 public:
  CayleySampler(double z, double t, bool keep_tree = false) : z_(z), t_(t), keep_tree_(keep_tree) {
    if (!(z > 0.0) || !(t > 0.0)) throw DomainError("Cayley coordinates need z > 0 and t > 0");
    const double rhs = z * std::exp(t);
    if (!(t >= rhs)) throw DomainError("Cayley coordinates are not valid: t < z e^t");
    success_ = rhs / t;
  }

  double z() const noexcept { return z_; }
  double t() const noexcept { return t_; }
  double success_probability() const noexcept { return success_; }

  template <RandomSource R>
  Outcome sample_once(R& rng, std::uint64_t max_size) const {
    std::uint64_t size = 0;
    if (!keep_tree_) {
      std::uint64_t pending = 1;
      while (pending > 0) {
        --pending;
        if (!draw_bernoulli(success_, rng)) return Failure{0, 0};
        ++size;
        pending += draw_poisson(t_, rng);
        if (size + pending > max_size) return Overflow{};
      }
      return Accepted{TermTree{}, size};
    }

    TermTree tree({"T"});
    constexpr std::uint32_t kNoSlot = ~std::uint32_t{0};
    std::vector<std::uint32_t> stack{kNoSlot};
    while (!stack.empty()) {
      const auto slot = stack.back();
      stack.pop_back();
      if (!draw_bernoulli(success_, rng)) return Failure{0, 0};
      ++size;
      const auto k = draw_poisson(t_, rng);
      if (size + stack.size() + k > max_size) return Overflow{};
      const auto node = tree.add(TermKind::Tuple);
      tree.node(node).cls = 0;
      if (slot != kNoSlot) tree.set_child(slot, node);
      const auto pair = tree.reserve_children(node, 2);
      tree.set_child(pair, tree.add(TermKind::Atom));
      const auto list = tree.add(TermKind::List);
      tree.set_child(pair + 1, list);
      const auto first = tree.reserve_children(list, static_cast<std::uint32_t>(k));
      for (std::uint32_t c = static_cast<std::uint32_t>(k); c-- > 0;) stack.push_back(first + c);
    }
    return Accepted{std::move(tree), size};
  }

 private:
  double z_;
  double t_;
  bool keep_tree_;
  double success_ = 1.0;
};

template <RandomSource R>
Outcome sample_cayley(double z, double t, R& rng, std::uint64_t max_size, bool keep_tree = false) {
  return CayleySampler(z, t, keep_tree).sample_once(rng, max_size);
}

// ---------------------------------------------------------------------------
// Retry and size targeting

struct RetryResult {
  TermTree tree;
  std::uint64_t size = 0;
  std::uint64_t attempts = 0;
  std::uint64_t failures = 0;
  std::uint64_t overflows = 0;
};

/// Repeats attempts until one is accepted. Attempts are independent, so the
/// failure count before acceptance is geometric with mean a/A(z) - 1.
template <typename Source, RandomSource R>
RetryResult sample_with_retry(const Source& source, R& rng, std::uint64_t max_size, std::uint64_t max_attempts) {
  if (max_attempts < 1) throw DomainError("max_attempts must be at least 1");
  RetryResult r;
  while (r.attempts < max_attempts) {
    ++r.attempts;
    Outcome o = source.sample_once(rng, max_size);
    if (auto* ok = std::get_if<Accepted>(&o)) {
      r.tree = std::move(ok->tree);
      r.size = ok->size;
      return r;
    }
    if (is_failure(o)) ++r.failures; else ++r.overflows;
  }
  throw AttemptsExhausted("no object accepted in " + std::to_string(max_attempts) + " attempts");
}

struct TargetStats {
  std::uint64_t attempts = 0;
  std::uint64_t failures = 0;         // approximation rejections
  std::uint64_t overflows = 0;        // aborted above the window
  std::uint64_t size_rejections = 0;  // completed below the window
};

struct TargetedResult {
  TermTree tree;
  std::uint64_t size = 0;
  TargetStats stats;
};

/// Size window [ceil(n(1-tol)), floor(n(1+tol))].
inline std::pair<std::uint64_t, std::uint64_t> target_window(std::uint64_t target, double tolerance) {
  if (!(tolerance >= 0.0 && tolerance < 1.0)) throw DomainError("tolerance must lie in [0,1)");
  const double n = static_cast<double>(target);
  // n*(1 +- tol) a rounding error away from an integer is that integer.
  auto snap = [](double x) {
    const double r = std::round(x);
    return std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : x;
  };
  return {static_cast<std::uint64_t>(std::ceil(snap(n * (1.0 - tolerance)))),
          static_cast<std::uint64_t>(std::floor(snap(n * (1.0 + tolerance))))};
}

/// Rejection to a size window layered over failure rejection. Attempts abort
/// as soon as they exceed the window.
template <typename Source, RandomSource R>
TargetedResult sample_targeted(const Source& source, R& rng, std::uint64_t target, double tolerance,
                               std::uint64_t max_attempts) {
  const auto [lo, hi] = target_window(target, tolerance);
  TargetedResult r;
  while (r.stats.attempts < max_attempts) {
    ++r.stats.attempts;
    Outcome o = source.sample_once(rng, hi);
    if (auto* ok = std::get_if<Accepted>(&o)) {
      if (ok->size >= lo) {
        r.tree = std::move(ok->tree);
        r.size = ok->size;
        return r;
      }
      ++r.stats.size_rejections;
    } else if (is_failure(o)) {
      ++r.stats.failures;
    } else {
      ++r.stats.overflows;
    }
  }
  throw AttemptsExhausted("no object in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] after " +
                          std::to_string(max_attempts) + " attempts");
}

}  // namespace anasamp
