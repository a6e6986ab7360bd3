#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace anasamp {

enum class TermKind : std::uint8_t {
  Atom,     // one unit of size
  Epsilon,  // size 0
  Tagged,   // union branch: `branch` selects the alternative, one child
  Tuple,    // product
  List,     // sequence
  Pair,     // mset2; a duplicated pair stores its child once
};

struct TermNode {
  TermKind kind = TermKind::Atom;
  bool duplicated = false;
  std::uint32_t branch = 0;
  std::int32_t cls = -1;  // class index when the node roots a class expansion
  std::uint32_t first = 0;
  std::uint32_t count = 0;
};

/// Arena-allocated object produced by a sampler. Node 0 is the root.
class TermTree {
 public:
  TermTree() = default;
  explicit TermTree(std::vector<std::string> class_names) : class_names_(std::move(class_names)) {}

  std::uint32_t add(TermKind kind) {
    nodes_.push_back(TermNode{kind});
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  /// Reserves `n` child slots for `node` and returns the first slot.
  std::uint32_t reserve_children(std::uint32_t node, std::uint32_t n) {
    const auto first = static_cast<std::uint32_t>(kids_.size());
    kids_.resize(kids_.size() + n, 0);
    nodes_[node].first = first;
    nodes_[node].count = n;
    return first;
  }

  void set_child(std::uint32_t slot, std::uint32_t child) { kids_[slot] = child; }

  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const TermNode& node(std::uint32_t i) const { return nodes_.at(i); }
  TermNode& node(std::uint32_t i) { return nodes_.at(i); }
  std::span<const std::uint32_t> children(std::uint32_t i) const {
    const auto& n = nodes_.at(i);
    return {kids_.data() + n.first, n.count};
  }
  void swap_children(std::uint32_t i) {
    const auto& n = nodes_.at(i);
    std::swap(kids_[n.first], kids_[n.first + 1]);
  }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

 private:
  std::vector<TermNode> nodes_;
  std::vector<std::uint32_t> kids_;
  std::vector<std::string> class_names_;
};

/// Number of atoms, counting each duplicated pair's child twice.
inline std::uint64_t tree_size(const TermTree& tree) {
  if (tree.empty()) return 0;
  std::uint64_t size = 0;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> stack{{0, 1}};
  while (!stack.empty()) {
    auto [i, mult] = stack.back();
    stack.pop_back();
    const auto& n = tree.node(i);
    if (n.kind == TermKind::Atom) size += mult;
    const std::uint64_t m = (n.kind == TermKind::Pair && n.duplicated) ? 2 * mult : mult;
    for (auto c : tree.children(i)) stack.emplace_back(c, m);
  }
  return size;
}

namespace detail {

/// Appends the canonical form of the subtree at `root` to `out`. Pair
/// members are rendered separately so they can be ordered; when `reorder`
/// points at `tree`, stored members are swapped into canonical order too.
inline void write_canonical(const TermTree& tree, TermTree* reorder, std::uint32_t root, std::string& out) {
  // A task is either a node to render or a literal to append.
  struct Task {
    std::uint32_t node;
    const char* literal;
  };
  std::vector<Task> stack{{root, nullptr}};
  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    if (t.literal) {
      out += t.literal;
      continue;
    }
    const TermNode& n = tree.node(t.node);
    const auto kids = tree.children(t.node);
    switch (n.kind) {
      case TermKind::Atom: out += "●"; break;
      case TermKind::Epsilon: out += "ε"; break;
      case TermKind::Tagged:
        out += std::to_string(n.branch);
        out += ':';
        stack.push_back({kids[0], nullptr});
        break;
      case TermKind::Tuple:
      case TermKind::List: {
        const bool tuple = n.kind == TermKind::Tuple;
        out += tuple ? '(' : '[';
        stack.push_back({0, tuple ? ")" : "]"});
        for (std::size_t k = kids.size(); k-- > 0;) {
          stack.push_back({kids[k], nullptr});
          if (k) stack.push_back({0, ","});
        }
        break;
      }
      case TermKind::Pair: {
        std::string a, b;
        const std::uint32_t node = t.node;
        write_canonical(tree, reorder, tree.children(node)[0], a);
        if (n.duplicated) {
          b = a;
        } else {
          write_canonical(tree, reorder, tree.children(node)[1], b);
          if (b < a) {
            std::swap(a, b);
            if (reorder) reorder->swap_children(node);
          }
        }
        out += '{';
        out += a;
        out += ',';
        out += b;
        out += '}';
        break;
      }
    }
  }
}

}  // namespace detail

/// Deterministic text form: atom `●`, epsilon `ε`, union branch `i:child`,
/// product `(a,b,...)`, sequence `[a,...]`, unordered pair `{min,max}` with
/// members in byte-lexicographic order.
inline std::string canonical_serialize(const TermTree& tree) {
  if (tree.empty()) return {};
  std::string out;
  detail::write_canonical(tree, nullptr, 0, out);
  return out;
}

/// Stores every non-duplicated pair's members in canonical order.
inline void canonicalize(TermTree& tree) {
  if (tree.empty()) return;
  std::string scratch;
  detail::write_canonical(tree, &tree, 0, scratch);
}

/// Leaf counts bucketed by duplication multiplicity (1, 2, 4, ...).
/// Sum of multiplicity * count equals tree_size(tree).
inline std::map<std::uint64_t, std::uint64_t> symmetry_histogram(const TermTree& tree) {
  std::map<std::uint64_t, std::uint64_t> hist;
  if (tree.empty()) return hist;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> stack{{0, 1}};
  while (!stack.empty()) {
    auto [i, mult] = stack.back();
    stack.pop_back();
    const auto& n = tree.node(i);
    if (n.kind == TermKind::Atom) ++hist[mult];
    const std::uint64_t m = (n.kind == TermKind::Pair && n.duplicated) ? 2 * mult : mult;
    for (auto c : tree.children(i)) stack.emplace_back(c, m);
  }
  return hist;
}

}  // namespace anasamp
